#ifndef MUHS_LAGRANGE_HPP
#define MUHS_LAGRANGE_HPP

// Characteristics q_t = u(t, q), q(0, x) = x, with the variational equation
// for q_x, and the conservation law y(t, q) q_x^2 = y0 e^{-lambda t} along them.

#include "muhs/dynamics.hpp"
#include "muhs/field.hpp"
#include "muhs/io.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace muhs {

/// The flow map lost monotonicity (q_x <= 0): the solution has broken.
class FlowDegenerate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FlowMap {
    double t = 0.0;
    std::vector<double> seeds;
    std::vector<double> q;   ///< unwrapped positions
    std::vector<double> qx;  ///< dq/dx at the seeds

    /// q = x at the seeds x_i = i/M.
    static FlowMap identity(std::size_t m) {
        if (m == 0) throw std::invalid_argument("flow map needs at least one particle");
        std::vector<double> x(m);
        for (std::size_t i = 0; i < m; ++i) x[i] = static_cast<double>(i) / static_cast<double>(m);
        return at_seeds(std::move(x));
    }

    static FlowMap at_seeds(std::vector<double> x) {
        FlowMap f;
        f.q = x;
        f.qx.assign(x.size(), 1.0);
        f.seeds = std::move(x);
        return f;
    }

    std::size_t size() const { return q.size(); }
};

/// Anything that yields the spectrum of u(t, .) at arbitrary t.
template <class S>
concept FieldSampler = requires(const S& s, double t) {
    { s.at(t) } -> std::convertible_to<Spectrum>;
};

/// u(t, .) = u for all t.
struct FrozenSampler {
    Spectrum u;
    Spectrum at(double) const { return u; }
};

/// Cubic Hermite interpolation in time between stored snapshots {t, u, u_t}.
class SnapshotSampler {
public:
    explicit SnapshotSampler(const std::vector<Snapshot>& snaps) : snaps_(snaps) {
        if (snaps_.empty()) throw std::invalid_argument("sampler needs at least one snapshot");
        for (std::size_t i = 1; i < snaps_.size(); ++i)
            if (!(snaps_[i].t > snaps_[i - 1].t)) throw std::invalid_argument("snapshot times must increase");
    }

    double t_begin() const { return snaps_.front().t; }
    double t_end() const { return snaps_.back().t; }

    Spectrum at(double t) const {
        const double slack = 1e-12 * std::max(1.0, std::abs(t_end()));
        if (t < t_begin() - slack || t > t_end() + slack)
            throw std::out_of_range("time " + std::to_string(t) + " outside the stored snapshots");
        if (snaps_.size() == 1) return snaps_.front().u;
        auto it = std::upper_bound(snaps_.begin(), snaps_.end(), t, [](double v, const Snapshot& s) { return v < s.t; });
        std::size_t b = static_cast<std::size_t>(it - snaps_.begin());
        b = std::clamp<std::size_t>(b, 1, snaps_.size() - 1);
        const Snapshot& lo = snaps_[b - 1];
        const Snapshot& hi = snaps_[b];
        const double h = hi.t - lo.t, s = (t - lo.t) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        Spectrum out = h00 * lo.u;
        out += (h10 * h) * lo.ut;
        out += h01 * hi.u;
        out += (h11 * h) * hi.ut;
        return out;
    }

private:
    const std::vector<Snapshot>& snaps_;
};

/// Value and derivative of the trigonometric interpolant in one sweep.
inline std::pair<double, double> value_and_slope(const Spectrum& s, double x) {
    const std::size_t h = s.nyquist();
    const cplx step = std::polar(1.0, two_pi * x);
    cplx phase = step, v = 0.0, d = 0.0;
    for (std::size_t k = 1; k < h; ++k) {
        const cplx term = s[k] * phase;
        v += term;
        d += term * static_cast<double>(k);
        phase *= step;
    }
    const double w = std::numbers::pi * static_cast<double>(s.n());
    const double a = s[h].real();
    return {s[0].real() + 2.0 * v.real() + a * std::cos(w * x), -2.0 * two_pi * d.imag() - a * w * std::sin(w * x)};
}

/// One RK4 step of q' = u(t, q), q_x' = u_x(t, q) q_x.
template <FieldSampler S>
FlowMap advance_flow(const FlowMap& flow, const S& sampler, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("flow step must be positive");
    const std::size_t m = flow.size();
    auto slope = [&](const Spectrum& u, const std::vector<double>& q, const std::vector<double>& qx,
                     std::vector<double>& dq, std::vector<double>& dqx) {
        for (std::size_t i = 0; i < m; ++i) {
            const auto [v, vx] = value_and_slope(u, q[i]);
            dq[i] = v;
            dqx[i] = vx * qx[i];
        }
    };
    const Spectrum u0 = sampler.at(flow.t);
    const Spectrum uh = sampler.at(flow.t + 0.5 * dt);
    const Spectrum u1 = sampler.at(flow.t + dt);

    std::vector<double> k1q(m), k1x(m), k2q(m), k2x(m), k3q(m), k3x(m), k4q(m), k4x(m), q(m), qx(m);
    slope(u0, flow.q, flow.qx, k1q, k1x);
    for (std::size_t i = 0; i < m; ++i) {
        q[i] = flow.q[i] + 0.5 * dt * k1q[i];
        qx[i] = flow.qx[i] + 0.5 * dt * k1x[i];
    }
    slope(uh, q, qx, k2q, k2x);
    for (std::size_t i = 0; i < m; ++i) {
        q[i] = flow.q[i] + 0.5 * dt * k2q[i];
        qx[i] = flow.qx[i] + 0.5 * dt * k2x[i];
    }
    slope(uh, q, qx, k3q, k3x);
    for (std::size_t i = 0; i < m; ++i) {
        q[i] = flow.q[i] + dt * k3q[i];
        qx[i] = flow.qx[i] + dt * k3x[i];
    }
    slope(u1, q, qx, k4q, k4x);

    FlowMap next;
    next.t = flow.t + dt;
    next.seeds = flow.seeds;
    next.q.resize(m);
    next.qx.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        next.q[i] = flow.q[i] + dt / 6.0 * (k1q[i] + 2 * k2q[i] + 2 * k3q[i] + k4q[i]);
        next.qx[i] = flow.qx[i] + dt / 6.0 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
        if (!(next.qx[i] > 0.0) || !std::isfinite(next.q[i]))
            throw FlowDegenerate("q_x <= 0 at seed " + io::format_double(flow.seeds[i]) + ", t = " + io::format_double(next.t));
    }
    return next;
}

// ---------------------------------------------------------------------------

/// y = mu(u) - u_xx as a spectrum.
inline Spectrum momentum(const Spectrum& u) {
    Spectrum y = derivative(u, 2);
    y *= -1.0;
    y[0] = u[0];
    return y;
}

struct FlowRow {
    double t, x_seed, q, qx, y_along, residual;
};

struct TransportOptions {
    std::size_t particles = 64;
    double t_max = std::numeric_limits<double>::infinity();
    /// Keep rows for every this many snapshot times (0 = none).
    std::size_t row_stride = 1;
};

struct TransportCheck {
    double max_residual = 0.0;
    double t_checked = 0.0;  ///< last snapshot time included
    std::vector<FlowRow> rows;
};

/// Advances the flow map across the stored snapshots of a run and measures
/// max |y(t, q) q_x^2 - y0(x) e^{-lambda t}| / max(1, max|y0|).
inline TransportCheck momentum_transport_residual(const PeriodicField& u0, const RunResult& run, const TransportOptions& opt = {}) {
    if (run.snapshots.empty()) throw std::invalid_argument("run has no snapshots; enable snapshot_stride");
    const double lambda = run.lambda;
    const Spectrum y0 = momentum(u0.spectrum());
    const double scale = std::max(1.0, refined_max_abs(y0));

    FlowMap flow = FlowMap::identity(opt.particles);
    flow.t = run.snapshots.front().t;
    std::vector<double> y0_seed(flow.size());
    for (std::size_t i = 0; i < flow.size(); ++i) y0_seed[i] = evaluate(y0, flow.seeds[i]);

    const SnapshotSampler sampler(run.snapshots);
    TransportCheck out;
    for (std::size_t s = 0; s < run.snapshots.size(); ++s) {
        const Snapshot& snap = run.snapshots[s];
        if (snap.t > opt.t_max) break;
        if (s > 0) flow = advance_flow(flow, sampler, snap.t - flow.t);
        flow.t = snap.t;
        const Spectrum y = momentum(snap.u);
        const double decay = std::exp(-lambda * snap.t);
        const bool keep = opt.row_stride && s % opt.row_stride == 0;
        for (std::size_t i = 0; i < flow.size(); ++i) {
            const double ya = evaluate(y, flow.q[i]);
            const double r = std::abs(ya * flow.qx[i] * flow.qx[i] - y0_seed[i] * decay) / scale;
            out.max_residual = std::max(out.max_residual, r);
            if (keep) out.rows.push_back({snap.t, flow.seeds[i], flow.q[i], flow.qx[i], ya, r});
        }
        out.t_checked = snap.t;
    }
    return out;
}

inline std::string flow_csv(const std::vector<FlowRow>& rows) {
    std::string out = "t,x_seed,q,qx,y_along,residual\n";
    for (const auto& r : rows) {
        const double v[] = {r.t, r.x_seed, r.q, r.qx, r.y_along, r.residual};
        for (std::size_t i = 0; i < std::size(v); ++i) {
            if (i) out += ',';
            out += io::format_double(v[i]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace muhs

#endif  // MUHS_LAGRANGE_HPP
