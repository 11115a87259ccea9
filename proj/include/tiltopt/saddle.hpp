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

#ifndef TILTOPT_SADDLE_HPP
#define TILTOPT_SADDLE_HPP

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiltopt {

/// min f(x) s.t. g_i(x) <= 0, i = 1..m, with Lagrangian L(x,u) = f(x) + sum u_i g_i(x).
///
/// Implementations must be pure: identical inputs give bit-identical outputs.
class SaddleProblem {
public:
    virtual ~SaddleProblem() = default;

    virtual std::size_t primal_dim() const = 0;
    virtual std::size_t dual_dim() const = 0;

    virtual double objective(std::span<const double> x) const = 0;
    virtual void constraints(std::span<const double> x, std::span<double> g) const = 0;

    /// A subgradient of L(., u) at x.
    virtual void lagrangian_gradient(std::span<const double> x, std::span<const double> u,
                                     std::span<double> grad) const = 0;

    double lagrangian(std::span<const double> x, std::span<const double> u) const;
};

/// SaddleProblem assembled from callables; convenient for small analytic problems.
class FunctionalProblem final : public SaddleProblem {
public:
    using Scalar = std::function<double(std::span<const double>)>;
    using Gradient = std::function<void(std::span<const double>, std::span<double>)>;

    FunctionalProblem(std::size_t n, Scalar f, Gradient df, std::vector<Scalar> g, std::vector<Gradient> dg);

    std::size_t primal_dim() const override { return n_; }
    std::size_t dual_dim() const override { return g_.size(); }
    double objective(std::span<const double> x) const override { return f_(x); }
    void constraints(std::span<const double> x, std::span<double> g) const override;
    void lagrangian_gradient(std::span<const double> x, std::span<const double> u,
                             std::span<double> grad) const override;

private:
    std::size_t n_;
    Scalar f_;
    Gradient df_;
    std::vector<Scalar> g_;
    std::vector<Gradient> dg_;
};

struct SaddleState {
    std::size_t t = 0;
    std::vector<double> x;
    std::vector<double> u;
    double alpha = 0.05;
};

/// Thrown by step() when a subgradient or constraint value is not finite.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One simultaneous primal-dual update, both subgradients taken at the pre-step point:
///   x <- x - alpha dL/dx(x,u),   u <- [u + alpha g(x)]^+
SaddleState step(const SaddleProblem& problem, const SaddleState& state);

struct IterationRecord {
    std::size_t t = 0;
    std::vector<double> x;
    std::vector<double> u;
    double lagrangian = 0.0;
    std::vector<double> g;
    double epsilon = 0.0;     // sum (dL/dx)^2 + sum g^2
    double max_step = 0.0;    // max |x(t) - x(t-1)|, 0 at t = 0
};

struct StopRule {
    enum class Kind { fixed_iterations, converged };
    Kind kind = Kind::fixed_iterations;
    double tolerance = 1e-4;     // on max |x(t+1) - x(t)|
    std::size_t patience = 50;   // consecutive steps below tolerance
};

struct RunOptions {
    double alpha = 0.05;
    std::size_t iterations = 1000;
    StopRule stop;
    double divergence_factor = 1e6;  // ceiling on ||(x,u)|| relative to the initial norm
};

struct IterationTrace {
    std::vector<IterationRecord> records;  // iterations + 1 entries unless truncated
    double alpha = 0.0;
    bool diverged = false;
    std::optional<std::size_t> converged_at;  // first t of the final below-tolerance streak

    const IterationRecord& back() const { return records.back(); }
    std::size_t iterations() const { return records.empty() ? 0 : records.size() - 1; }
};

IterationRecord make_record(const SaddleProblem& problem, std::size_t t, std::span<const double> x,
                            std::span<const double> u);

IterationTrace run(const SaddleProblem& problem, std::span<const double> x0, std::span<const double> u0,
                   const RunOptions& options);

/// sum (x - x_ref)^2 + sum (u - u_ref)^2
double lyapunov(std::span<const double> x, std::span<const double> u, std::span<const double> x_ref,
                std::span<const double> u_ref);

struct GapCertificate {
    std::vector<double> averaged_gap;  // index t-1 holds (1/t) sum_{tau=0..t} gap(tau)
    std::vector<double> bound;         // V(0)/(2 alpha t) + alpha M(t)/2
    double initial_distance = 0.0;     // V(x(0), u(0))
    double mean_epsilon = 0.0;         // M at the final t
    bool nonnegative = true;
    bool bound_holds = true;
    double worst_slack = 0.0;          // min over t of bound - averaged gap
};

/// Averaged saddle gap L(x(tau), u_ref) - L(x_ref, u(tau)) against its bound, for every t >= 1.
GapCertificate gap_certificate(const SaddleProblem& problem, const IterationTrace& trace,
                               std::span<const double> x_ref, std::span<const double> u_ref,
                               double nonneg_tolerance = 1e-12);

/// Per-step slack of V(t+1) <= V(t) - 2 alpha gap(t) + alpha^2 eps(t); negative means violation.
std::vector<double> lyapunov_slack(const SaddleProblem& problem, const IterationTrace& trace,
                                   std::span<const double> x_ref, std::span<const double> u_ref);

/// CSV, one row per record: t, x_0..x_{n-1}, u_0..u_{m-1}, L, g_0..g_{m-1}, eps.
void write_trace_csv(std::ostream& os, const IterationTrace& trace);

} // namespace tiltopt

#endif
