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

#include "tiltopt/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace tiltopt {

double SaddleProblem::lagrangian(std::span<const double> x, std::span<const double> u) const
{
    std::vector<double> g(dual_dim());
    constraints(x, g);
    double l = objective(x);
    for (std::size_t i = 0; i < g.size(); ++i)
        l += u[i] * g[i];
    return l;
}

FunctionalProblem::FunctionalProblem(std::size_t n, Scalar f, Gradient df, std::vector<Scalar> g,
                                     std::vector<Gradient> dg)
    : n_(n), f_(std::move(f)), df_(std::move(df)), g_(std::move(g)), dg_(std::move(dg))
{
    if (g_.size() != dg_.size())
        throw std::invalid_argument("one gradient per constraint required");
}

void FunctionalProblem::constraints(std::span<const double> x, std::span<double> g) const
{
    for (std::size_t i = 0; i < g_.size(); ++i)
        g[i] = g_[i](x);
}

void FunctionalProblem::lagrangian_gradient(std::span<const double> x, std::span<const double> u,
                                            std::span<double> grad) const
{
    df_(x, grad);
    std::vector<double> tmp(n_);
    for (std::size_t i = 0; i < g_.size(); ++i) {
        if (u[i] == 0.0)
            continue;
        dg_[i](x, tmp);
        for (std::size_t j = 0; j < n_; ++j)
            grad[j] += u[i] * tmp[j];
    }
}

SaddleState step(const SaddleProblem& problem, const SaddleState& state)
{
    const std::size_t n = problem.primal_dim();
    const std::size_t m = problem.dual_dim();
    std::vector<double> grad(n);
    std::vector<double> g(m);
    problem.lagrangian_gradient(state.x, state.u, grad);
    problem.constraints(state.x, g);

    for (std::size_t j = 0; j < n; ++j)
        if (!std::isfinite(grad[j]))
            throw NonFiniteError("non-finite primal subgradient component dL/dx[" + std::to_string(j) +
                                 "] at t = " + std::to_string(state.t));
    for (std::size_t i = 0; i < m; ++i)
        if (!std::isfinite(g[i]))
            throw NonFiniteError("non-finite constraint value g[" + std::to_string(i) + "] at t = " +
                                 std::to_string(state.t));

    SaddleState next;
    next.t = state.t + 1;
    next.alpha = state.alpha;
    next.x.resize(n);
    next.u.resize(m);
    for (std::size_t j = 0; j < n; ++j)
        next.x[j] = state.x[j] - state.alpha * grad[j];
    for (std::size_t i = 0; i < m; ++i)
        next.u[i] = std::max(0.0, state.u[i] + state.alpha * g[i]);
    return next;
}

IterationRecord make_record(const SaddleProblem& problem, std::size_t t, std::span<const double> x,
                            std::span<const double> u)
{
    IterationRecord rec;
    rec.t = t;
    rec.x.assign(x.begin(), x.end());
    rec.u.assign(u.begin(), u.end());
    rec.g.resize(problem.dual_dim());
    problem.constraints(x, rec.g);
    std::vector<double> grad(problem.primal_dim());
    problem.lagrangian_gradient(x, u, grad);
    rec.lagrangian = problem.objective(x);
    double eps = 0.0;
    for (std::size_t i = 0; i < rec.g.size(); ++i) {
        rec.lagrangian += u[i] * rec.g[i];
        eps += rec.g[i] * rec.g[i];
    }
    for (double d : grad)
        eps += d * d;
    rec.epsilon = eps;
    return rec;
}

namespace {

double norm2(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (double v : a)
        s += v * v;
    for (double v : b)
        s += v * v;
    return std::sqrt(s);
}

} // namespace

IterationTrace run(const SaddleProblem& problem, std::span<const double> x0, std::span<const double> u0,
                   const RunOptions& options)
{
    if (x0.size() != problem.primal_dim() || u0.size() != problem.dual_dim())
        throw std::invalid_argument("initial point has the wrong dimension");
    if (!(options.alpha > 0.0))
        throw std::invalid_argument("step size must be > 0");

    IterationTrace trace;
    trace.alpha = options.alpha;
    SaddleState state{0, {x0.begin(), x0.end()}, {u0.begin(), u0.end()}, options.alpha};
    trace.records.push_back(make_record(problem, 0, state.x, state.u));

    const double ceiling = options.divergence_factor * std::max(1.0, norm2(state.x, state.u));
    std::size_t streak = 0;
    for (std::size_t k = 0; k < options.iterations; ++k) {
        SaddleState next = step(problem, state);
        double max_step = 0.0;
        for (std::size_t j = 0; j < next.x.size(); ++j)
            max_step = std::max(max_step, std::abs(next.x[j] - state.x[j]));
        state = std::move(next);

        const double nrm = norm2(state.x, state.u);
        if (!(nrm <= ceiling)) {
            trace.diverged = true;
            break;
        }
        auto rec = make_record(problem, state.t, state.x, state.u);
        rec.max_step = max_step;
        trace.records.push_back(std::move(rec));

        streak = max_step < options.stop.tolerance ? streak + 1 : 0;
        if (options.stop.kind == StopRule::Kind::converged && streak >= options.stop.patience)
            break;
    }

    // start of the final below-tolerance streak, if the run ends inside one
    std::size_t first = trace.records.size();
    while (first > 1 && trace.records[first - 1].max_step < options.stop.tolerance)
        --first;
    if (first < trace.records.size())
        trace.converged_at = trace.records[first].t;
    return trace;
}

double lyapunov(std::span<const double> x, std::span<const double> u, std::span<const double> x_ref,
                std::span<const double> u_ref)
{
    double v = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        v += (x[j] - x_ref[j]) * (x[j] - x_ref[j]);
    for (std::size_t i = 0; i < u.size(); ++i)
        v += (u[i] - u_ref[i]) * (u[i] - u_ref[i]);
    return v;
}

GapCertificate gap_certificate(const SaddleProblem& problem, const IterationTrace& trace,
                               std::span<const double> x_ref, std::span<const double> u_ref,
                               double nonneg_tolerance)
{
    GapCertificate cert;
    if (trace.records.empty())
        return cert;
    const auto& first = trace.records.front();
    cert.initial_distance = lyapunov(first.x, first.u, x_ref, u_ref);
    cert.worst_slack = std::numeric_limits<double>::infinity();

    double gap_sum = 0.0;
    double eps_sum = 0.0;
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
        const auto& r = trace.records[k];
        gap_sum += problem.lagrangian(r.x, u_ref) - problem.lagrangian(x_ref, r.u);
        eps_sum += r.epsilon;
        if (k == 0)
            continue;
        const double t = static_cast<double>(k);
        const double avg = gap_sum / t;
        const double mean_eps = eps_sum / t;
        const double bound = cert.initial_distance / (2.0 * trace.alpha * t) + trace.alpha * mean_eps / 2.0;
        cert.averaged_gap.push_back(avg);
        cert.bound.push_back(bound);
        cert.mean_epsilon = mean_eps;
        if (avg < -nonneg_tolerance)
            cert.nonnegative = false;
        if (avg > bound)
            cert.bound_holds = false;
        cert.worst_slack = std::min(cert.worst_slack, bound - avg);
    }
    if (cert.averaged_gap.empty())
        cert.worst_slack = 0.0;
    return cert;
}

std::vector<double> lyapunov_slack(const SaddleProblem& problem, const IterationTrace& trace,
                                   std::span<const double> x_ref, std::span<const double> u_ref)
{
    std::vector<double> out;
    const double alpha = trace.alpha;
    for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
        const auto& now = trace.records[k];
        const auto& next = trace.records[k + 1];
        const double v_now = lyapunov(now.x, now.u, x_ref, u_ref);
        const double v_next = lyapunov(next.x, next.u, x_ref, u_ref);
        const double gap = problem.lagrangian(now.x, u_ref) - problem.lagrangian(x_ref, now.u);
        out.push_back(v_now - 2.0 * alpha * gap + alpha * alpha * now.epsilon - v_next);
    }
    return out;
}

void write_trace_csv(std::ostream& os, const IterationTrace& trace)
{
    if (trace.records.empty())
        return;
    const auto& r0 = trace.records.front();
    os << "t";
    for (std::size_t j = 0; j < r0.x.size(); ++j)
        os << ",x" << j;
    for (std::size_t i = 0; i < r0.u.size(); ++i)
        os << ",u" << i;
    os << ",L";
    for (std::size_t i = 0; i < r0.g.size(); ++i)
        os << ",g" << i;
    os << ",eps\n";

    const auto old = os.precision(17);
    for (const auto& r : trace.records) {
        os << r.t;
        for (double v : r.x)
            os << ',' << v;
        for (double v : r.u)
            os << ',' << v;
        os << ',' << r.lagrangian;
        for (double v : r.g)
            os << ',' << v;
        os << ',' << r.epsilon << '\n';
    }
    os.precision(old);
}

} // namespace tiltopt
