#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cmv/errors.hpp"
#include "cmv/model.hpp"

namespace cmv {

/// Smallest grid point past which every sampled kappa is >= 0. Throws
/// ProfileError when kappa is negative at the end of the grid.
double compute_R0(std::span<const double> r, std::span<const double> kappa);

/// Smallest grid point R >= R0 with kappa(s) R (R - R0) >= 8 for every
/// sampled s >= R. Throws ProfileError when no grid point qualifies.
double compute_R1(std::span<const double> r, std::span<const double> kappa, double R0);

/// Concave distance function and its ingredients on a uniform mesh of [0, r_max].
struct EberleProfile {
  std::vector<double> r;
  std::vector<double> kappa;
  std::vector<double> neg_integral;  ///< int_0^r s kappa(s)^- ds
  std::vector<double> phi, Phi, g, f;
  double R0 = 0.0;
  double R1 = 0.0;
  double kappa1 = 0.0;  ///< phi(R0)/2
  double J_R1 = 0.0;    ///< int_0^R1 Phi/phi
  double c_rate = 0.0;
  double c_argmin = 0.0;
  double sigma0 = 0.0;
  double r_max = 0.0;

  std::size_t mesh() const noexcept { return r.size(); }
  double step() const noexcept { return r.size() > 1 ? r[1] - r[0] : 0.0; }
  /// Linear interpolation; beyond r_max, f continues with slope kappa1.
  double f_at(double x) const;

  /// Header `r,kappa,phi,Phi,g,f`.
  void write_csv(std::ostream& os) const;
  /// Header `R0,R1,kappa1,c_rate` and one row.
  void write_summary(std::ostream& os) const;
};

struct ProfileOptions {
  std::size_t mesh = 8192;
  double first_r_max = 50.0;
  /// Final r_max is this multiple of R1.
  double r_max_factor = 4.0;
};

/// Single pass on [0, r_max]. kappa at r = 0 is read at half a mesh step.
/// Fills c_rate by certify_contraction_rate. Throws ProfileError when
/// R1 > r_max/2 or the certified rate is not positive.
EberleProfile build_profile(const ScalarFunction& kappa, double sigma0, double r_max, std::size_t mesh = 8192);

/// Two passes: locate R1 on [0, first_r_max], then rebuild on [0, r_max_factor * R1].
EberleProfile build_profile(const ScalarFunction& kappa, double sigma0, const ProfileOptions& options = {});

struct ContractionRate {
  double c = 0.0;
  double argmin = 0.0;
};

/// min over interior mesh points of -2 sigma0^2 (f'' - r kappa f'/4) / f with
/// central differences. Throws ProfileError when the minimum is <= 0.
ContractionRate certify_contraction_rate(const EberleProfile& profile);

struct InvariantCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;  ///< largest violation observed (<= tolerance when passed)
};

/// Monotonicity, plateaus, concavity and both sandwiches at `tolerance`.
std::vector<InvariantCheck> check_profile_invariants(const EberleProfile& profile, double tolerance = 1e-8);

/// Mean of |a_(i) - b_(i)| over the sorted samples.
double w1_sorted(std::span<const double> a, std::span<const double> b);

/// Mean f(|a_(i) - b_(i)|) over the sorted samples.
double sorted_pairing_cost(std::span<const double> a, std::span<const double> b, const EberleProfile& profile);

struct DfDistance {
  double value = 0.0;
  bool exact = true;  ///< false: sorted-pairing upper bound
};

inline constexpr std::size_t kAssignmentLimit = 512;

/// Optimal-transport cost f(|a - b|) between two equal-weight samples of
/// points in R^d (rows of length d). Exact by assignment up to `limit`
/// points; above it (d = 1 only) the sorted-pairing cost, flagged as a bound.
DfDistance df_distance(std::span<const double> a, std::span<const double> b, const EberleProfile& profile,
                       int d = 1, std::size_t limit = kAssignmentLimit);

}  // namespace cmv
