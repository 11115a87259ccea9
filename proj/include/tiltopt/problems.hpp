// SPDX-License-Identifier: Apache-2.0
//
// tiltopt - joint antenna tilt optimisation for cellular downlinks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef TILTOPT_PROBLEMS_HPP
#define TILTOPT_PROBLEMS_HPP

#include "tiltopt/radio.hpp"
#include "tiltopt/saddle.hpp"

#include <span>
#include <string>
#include <vector>

namespace tiltopt {

enum class Variant {
    high_sinr,   // P1: maximise sum U(R-hat) under the high-SINR rate
    prop_fair,   // P2: maximise sum ln R with the exact rate
};

struct UtilitySpec {
    enum class Kind { linear, log };
    Kind kind = Kind::linear;

    double value(double r) const;
    double derivative(double r) const;
};

/// Dual variables. Flattened for the engine as [rate (one per user), lower, upper (one per sector)].
struct Multipliers {
    std::vector<double> rate;   // lambda^1_u, minimum-rate constraint
    std::vector<double> lower;  // lambda^2_b, tilt >= tilt_min
    std::vector<double> upper;  // lambda^3_b, tilt <= tilt_max

    static Multipliers zeros(std::size_t users, std::size_t sectors);
    static Multipliers unflatten(std::span<const double> u, std::size_t users, std::size_t sectors);
    std::vector<double> flatten() const;
};

// ---------------------------------------------------------------------------
// Sensitivity kernels. The centralised gradient and the distributed agents both call these with
// the same arguments, which is what makes the two bit-identical.

/// P1 works with R-hat, P2 with R: the rate a user's objective and constraint are built from.
struct UserRateTerm {
    double raw = 0.0;        // r or r-hat before the cap
    double truncated = 0.0;  // min(rate_max, raw)
    bool capped = false;
};

UserRateTerm user_rate_term(const Network& net, Variant variant, std::span<const double> sinr);

/// The argument of U in P1: R-hat in nats/s/Hz (divided by the bandwidth). P2 passes R through.
double spectral_efficiency(const Network& net, Variant variant, const UserRateTerm& term);

/// d ln(gamma)/d(serving tilt), from the exact pattern at the reported pointing angle.
double serving_log_sinr_slope(double tilt, double reported_pointing, double beamwidth);

/// d ln(gamma_n)/d(interferer tilt): -H-hat_c * slope_c / I_n, with slope_c the tangent slope of
/// the interferer's gain exponent at the reported pointing angle.
double interferer_log_sinr_slope(double interferer_power, double reported_pointing, double lin_point,
                                 double beamwidth, double interference);

/// Per-sub-carrier weights turning d ln(gamma_n) into the derivative of the user's term:
///   high_sinr: d (R-hat/w) = sum_n (1/N) d ln gamma_n
///   prop_fair: d ln R  = sum_n (w/N) kappa gamma_n / (1 + kappa gamma_n) / r * d ln gamma_n
/// All zero when the user sits on the rate cap.
std::vector<double> rate_sensitivity_weights(const Network& net, Variant variant, std::span<const double> sinr);

/// Minimum-rate constraint value: (r_min - R-hat)/w for P1, ln r_min - ln R for P2.
double rate_constraint_value(const Network& net, Variant variant, const UserRateTerm& term);

/// Multiplier of the user's rate derivative in dL/d(tilt): -(U'(R-hat/w) + lambda^1) for P1,
/// -(1 + lambda^1) for P2.
double user_gradient_coefficient(Variant variant, const UtilitySpec& utility, double rate_term,
                                 double lambda_rate);

/// One user's contribution to dL/d(tilt_c), given per-sub-carrier d ln gamma_n / d tilt_c.
double user_tilt_term(double coefficient, std::span<const double> weights, std::span<const double> dlog_sinr);

// ---------------------------------------------------------------------------

/// P1 or P2 bound to a network and a fixed linearisation point.
class TiltProblem final : public SaddleProblem {
public:
    TiltProblem(const Network& net, Variant variant, LinearizationPoint lin, UtilitySpec utility = {});

    const Network& network() const { return links_.network(); }
    const LinkTable& links() const { return links_; }
    Variant variant() const { return variant_; }
    const UtilitySpec& utility() const { return utility_; }

    std::size_t primal_dim() const override { return network().num_sectors(); }
    std::size_t dual_dim() const override { return network().num_users() + 2 * network().num_sectors(); }

    /// P1: -sum U(R-hat_u / w). P2: -sum ln R_u.
    ///
    /// P1 measures rates per unit bandwidth so the step size does not depend on the rate unit;
    /// P2 is unit-free already because only ratios of rates enter its gradient.
    double objective(std::span<const double> tilts) const override;

    /// [(r_min - R-hat_u)/w or ln r_min - ln R_u per user, tilt_min - theta_b, theta_b - tilt_max]
    void constraints(std::span<const double> tilts, std::span<double> g) const override;

    void lagrangian_gradient(std::span<const double> tilts, std::span<const double> u,
                             std::span<double> grad) const override;

    /// The user-level quantity of the objective: R-hat (P1) or R (P2), truncated.
    std::vector<UserRateTerm> rate_terms(std::span<const double> tilts) const;

private:
    LinkTable links_;
    Variant variant_;
    UtilitySpec utility_;
};

struct Subgradients {
    std::vector<double> tilt;  // dL/d theta
    Multipliers dual;          // dL/d lambda, same layout as the multipliers
};

Subgradients full_subgradients(const TiltProblem& problem, std::span<const double> tilts, const Multipliers& m);

struct FeasibilityReport {
    std::vector<std::string> violations;  // one line per violated constraint
    std::size_t rate_violations = 0;
    std::size_t bound_violations = 0;
    double worst_rate_shortfall = 0.0;    // in rate units (Mbps); 0 when all rates meet the floor
    bool feasible() const { return violations.empty(); }
};

/// Constraint check at a tilt vector against the problem's own rate term (R-hat for P1, R for P2).
FeasibilityReport feasibility_check(const TiltProblem& problem, std::span<const double> tilts,
                                    double bound_tolerance = 1e-3, double rate_tolerance = 1e-3);

/// Heuristic: the run ends with a violated minimum rate while the total rate multiplier is still
/// growing over the last quarter of the trace.
bool suspect_infeasible(const TiltProblem& problem, const IterationTrace& trace, double rate_tolerance = 1e-3);

} // namespace tiltopt

#endif
