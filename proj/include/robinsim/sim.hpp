#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "robinsim/blocks.hpp"
#include "robinsim/errors.hpp"
#include "robinsim/geometry.hpp"
#include "robinsim/rng.hpp"
#include "robinsim/stats.hpp"

namespace robinsim {

struct SimConfig {
    double dt_max = 1e-3;
    double dt_min = 1e-12;
    double kappa = 1.0;
    std::int64_t n_paths = 1000;
    std::uint64_t seed = 0;
    double robin_c = 1.0;
    double max_time = 100.0;
    std::int64_t max_steps = 100'000'000;
    double wall_layer = kInf;    // clearance from the wall below which steps stop shrinking
    int threads = 0;             // 0: ROBINSIM_THREADS, else hardware concurrency
    double time_budget = 1e10;   // cap on max_time * n_paths
};

inline void validate_config(const SimConfig& c) {
    if (!(c.dt_min > 0.0) || !(c.dt_max >= c.dt_min) || !std::isfinite(c.dt_max))
        throw InvalidParameter("need 0 < dt_min <= dt_max");
    if (!(c.kappa > 0.0) || !std::isfinite(c.kappa)) throw InvalidParameter("kappa must be positive");
    if (c.n_paths < 1) throw ContractViolation("n_paths must be >= 1");
    if (!(c.robin_c >= 0.0) || !std::isfinite(c.robin_c)) throw InvalidParameter("robin_c must be >= 0");
    if (!(c.max_time > 0.0)) throw InvalidParameter("max_time must be positive");
    if (c.max_steps < 1) throw InvalidParameter("max_steps must be >= 1");
    if (!(c.wall_layer > 0.0)) throw InvalidParameter("wall_layer must be positive");
    if (c.max_time * static_cast<double>(c.n_paths) > c.time_budget)
        throw InvalidParameter("max_time * n_paths exceeds the time budget");
}

inline int worker_count(const SimConfig& c) {
    if (c.threads > 0) return c.threads;
    if (const char* env = std::getenv("ROBINSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline constexpr std::int64_t kPathBlock = 256;

/// Runs f(begin, end) over fixed blocks of kPathBlock indices on `threads` workers and returns
/// the block results in index order. The block layout never depends on the worker count.
template <class R, class F>
std::vector<R> run_blocks(std::int64_t n, int threads, F&& f) {
    const std::int64_t nblocks = (n + kPathBlock - 1) / kPathBlock;
    std::vector<std::optional<R>> out(static_cast<std::size_t>(nblocks));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nblocks));
    std::atomic<std::int64_t> next{0};
    auto work = [&] {
        for (std::int64_t b = next++; b < nblocks; b = next++) {
            try {
                out[static_cast<std::size_t>(b)].emplace(f(b * kPathBlock, std::min(n, (b + 1) * kPathBlock)));
            } catch (...) {
                errors[static_cast<std::size_t>(b)] = std::current_exception();
            }
        }
    };
    const int nw = static_cast<int>(std::min<std::int64_t>(std::max(1, threads), nblocks));
    if (nw <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nw; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<R> res;
    res.reserve(out.size());
    for (auto& o : out) res.push_back(std::move(*o));
    return res;
}

struct PathState {
    Point p;
    double t = 0.0;
    double L = 0.0;
    std::uint64_t step = 0;
};

struct PathOutcome {
    double T = 0.0;
    double L = 0.0;
    bool absorbed = false;
    std::int64_t steps = 0;
};

inline void require_simulatable(const DomainSpec& spec) {
    if (spec.is<SnowflakeCubes>()) throw UnsupportedFamily("snowflake is a criterion-only family");
}

inline double distance_to_bstar_boundary(const BStar& b, const Point& p) {
    return std::max(0.0, distance(p, b.center) - b.radius);
}

inline bool in_bstar(const BStar& b, const Point& p) { return distance(p, b.center) <= b.radius; }

/// Whether the segment [a, b] meets the closed ball.
inline bool segment_meets_ball(const Point& a, const Point& b, const BStar& ball) {
    const Point ab = b - a;
    const double len2 = norm_sq(ab);
    double s = len2 > 0.0 ? dot(ball.center - a, ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return distance(a + ab * s, ball.center) <= ball.radius;
}

/// dt = clamp(kappa * h^2, dt_min, dt_max) with h the smallest of the local channel scale, the
/// distance to the reference sphere and max(wall clearance, wall_layer).
inline double timestep(const Domain& dom, const Point& p, const SimConfig& cfg) {
    double s = std::min(dom.local_scale(p), distance_to_bstar_boundary(dom.spec().bstar, p));
    if (cfg.wall_layer < s) {
        const double wall = dom.contains(p) ? dom.distance_to_boundary(p) : 0.0;
        s = std::min(s, std::max(wall, cfg.wall_layer));
    }
    if (!std::isfinite(s)) return cfg.dt_max;
    return std::clamp(cfg.kappa * s * s, cfg.dt_min, cfg.dt_max);
}

/// Moves to the proposal, projecting back onto the closure when it leaves; returns the added
/// local time (the projection distance).
inline double apply_proposal(const Domain& dom, PathState& st, const Point& proposal) {
    if (!proposal.finite()) throw NumericFailure("non-finite proposal", 0);
    if (dom.contains(proposal)) {
        st.p = proposal;
        return 0.0;
    }
    const Projection pr = dom.project_to_closure(proposal);
    st.p = pr.q;
    st.L += pr.correction;
    return pr.correction;
}

/// One projected Euler step with the given standard normals.
inline double step_with(const Domain& dom, PathState& st, const double* z, double dt) {
    Point prop = st.p;
    const double s = std::sqrt(dt);
    for (std::size_t i = 0; i < prop.size(); ++i) prop[i] += s * z[i];
    const double dl = apply_proposal(dom, st, prop);
    st.t += dt;
    ++st.step;
    return dl;
}

inline double step(const Domain& dom, PathState& st, const SimConfig& cfg, const PathStream& rng) {
    double z[kMaxDim];
    rng.normals(st.step, z, static_cast<std::size_t>(dom.dim()));
    return step_with(dom, st, z, timestep(dom, st.p, cfg));
}

inline void require_start(const Domain& dom, const Point& x0) {
    require_dim(x0, static_cast<std::size_t>(dom.dim()));
    if (!x0.finite()) throw ContractViolation("start point is not finite");
    if (in_bstar(dom.spec().bstar, x0) || dom.contains(x0)) return;
    if (dom.project_to_closure(x0).correction <= 1e-12 * (1.0 + norm(x0))) return;
    throw ContractViolation("start point is outside the domain closure");
}

/// Observer called after each step as obs(from, to, dt, dL); returning true stops the path.
struct NoObserver {
    bool operator()(const Point&, const Point&, double, double) const noexcept { return false; }
};

template <class Obs>
PathOutcome run_path_observed(const Domain& dom, const Point& x0, const SimConfig& cfg, std::uint64_t path_index,
                              Obs&& obs, bool absorb = true) {
    const BStar& ball = dom.spec().bstar;
    PathOutcome out;
    if (absorb && in_bstar(ball, x0)) {
        out.absorbed = true;
        return out;
    }
    const PathStream rng(cfg.seed, path_index);
    PathState st{x0};
    double z[kMaxDim];
    const auto d = static_cast<std::size_t>(dom.dim());
    try {
        while (st.t < cfg.max_time && static_cast<std::int64_t>(st.step) < cfg.max_steps) {
            const double dt = std::min(timestep(dom, st.p, cfg), cfg.max_time - st.t);
            rng.normals(st.step, z, d);
            const Point from = st.p;
            const double dl = step_with(dom, st, z, dt);
            if (obs(from, st.p, dt, dl)) break;
            if (absorb && segment_meets_ball(from, st.p, ball)) {
                out.absorbed = true;
                break;
            }
        }
    } catch (const NumericFailure&) {
        throw NumericFailure("numeric failure in path", path_index);
    }
    if (!out.absorbed && st.t >= cfg.max_time) st.t = cfg.max_time;
    out.T = st.t;
    out.L = st.L;
    out.steps = static_cast<std::int64_t>(st.step);
    return out;
}

inline PathOutcome run_path(const Domain& dom, const Point& x0, const SimConfig& cfg, std::uint64_t path_index) {
    require_start(dom, x0);
    return run_path_observed(dom, x0, cfg, path_index, NoObserver{});
}

inline PathOutcome run_path(const DomainSpec& spec, const Point& x0, const SimConfig& cfg, std::uint64_t path_index) {
    validate(spec);
    require_simulatable(spec);
    return run_path(Domain(spec), x0, cfg, path_index);
}

namespace detail {

struct MomentBlock {
    BatchAccumulator acc;
    std::int64_t truncated = 0;
};

inline Domain prepare(const DomainSpec& spec, const Point& x0, const SimConfig& cfg) {
    validate(spec);
    require_simulatable(spec);
    validate_config(cfg);
    Domain dom(spec);
    require_start(dom, x0);
    return dom;
}

}  // namespace detail

/// Estimates for several Robin constants from one shared path ensemble.
inline std::vector<EstimateCI> estimate_u_curve(const DomainSpec& spec, const Point& x0, const SimConfig& cfg,
                                                const std::vector<double>& cs) {
    for (double c : cs) {
        if (!(c >= 0.0)) throw InvalidParameter("robin_c must be >= 0");
    }
    const Domain dom = detail::prepare(spec, x0, cfg);
    struct Blk {
        std::vector<BatchAccumulator> acc;
        std::int64_t truncated = 0;
    };
    auto blocks = run_blocks<Blk>(cfg.n_paths, worker_count(cfg), [&](std::int64_t b, std::int64_t e) {
        Blk r;
        r.acc.resize(cs.size());
        for (std::int64_t i = b; i < e; ++i) {
            const PathOutcome o = run_path_observed(dom, x0, cfg, static_cast<std::uint64_t>(i), NoObserver{});
            if (!o.absorbed) ++r.truncated;
            for (std::size_t k = 0; k < cs.size(); ++k) r.acc[k].add(std::exp(-0.5 * cs[k] * o.L));
        }
        return r;
    });
    std::vector<BatchAccumulator> acc(cs.size());
    std::int64_t truncated = 0;
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k < cs.size(); ++k) acc[k] = merge(acc[k], b.acc[k]);
        truncated += b.truncated;
    }
    std::vector<EstimateCI> out;
    for (const auto& a : acc) out.push_back(make_estimate(a, truncated));
    return out;
}

/// u(x0) = E exp(-c L / 2), L the boundary local time accumulated before hitting B*.
inline EstimateCI estimate_u(const DomainSpec& spec, const Point& x0, const SimConfig& cfg) {
    return estimate_u_curve(spec, x0, cfg, {cfg.robin_c}).front();
}

/// Mean hitting time of B*. Truncated paths enter with their truncated time, so the estimate is
/// a lower bound whenever truncation occurred.
inline EstimateCI estimate_mean_exit(const DomainSpec& spec, const Point& x0, const SimConfig& cfg) {
    const Domain dom = detail::prepare(spec, x0, cfg);
    auto blocks = run_blocks<detail::MomentBlock>(cfg.n_paths, worker_count(cfg), [&](std::int64_t b, std::int64_t e) {
        detail::MomentBlock r;
        for (std::int64_t i = b; i < e; ++i) {
            const PathOutcome o = run_path_observed(dom, x0, cfg, static_cast<std::uint64_t>(i), NoObserver{});
            if (!o.absorbed) ++r.truncated;
            r.acc.add(o.T);
        }
        return r;
    });
    BatchAccumulator acc;
    std::int64_t truncated = 0;
    for (const auto& b : blocks) {
        acc = merge(acc, b.acc);
        truncated += b.truncated;
    }
    return make_estimate(acc, truncated);
}

struct ProbeProfile {
    Point probe;
    double q25 = 0.0, q50 = 0.0, q75 = 0.0;
    EstimateCI u;  // E exp(-c L / 2) from the same paths
    double truncated_fraction = 0.0;
};

/// Quantiles of the local time collected before hitting B*, one ensemble per probe.
inline std::vector<ProbeProfile> local_time_profile(const DomainSpec& spec, const std::vector<Point>& probes,
                                                    const SimConfig& cfg) {
    std::vector<ProbeProfile> out;
    for (const Point& x0 : probes) {
        const Domain dom = detail::prepare(spec, x0, cfg);
        struct Blk {
            std::vector<double> L;
            std::int64_t truncated = 0;
        };
        auto blocks = run_blocks<Blk>(cfg.n_paths, worker_count(cfg), [&](std::int64_t b, std::int64_t e) {
            Blk r;
            for (std::int64_t i = b; i < e; ++i) {
                const PathOutcome o = run_path_observed(dom, x0, cfg, static_cast<std::uint64_t>(i), NoObserver{});
                if (!o.absorbed) ++r.truncated;
                r.L.push_back(o.L);
            }
            return r;
        });
        std::vector<double> ls;
        std::int64_t truncated = 0;
        for (const auto& b : blocks) {
            ls.insert(ls.end(), b.L.begin(), b.L.end());
            truncated += b.truncated;
        }
        BatchAccumulator acc;
        for (double l : ls) acc.add(std::exp(-0.5 * cfg.robin_c * l));
        ProbeProfile p;
        p.probe = x0;
        p.q25 = quantile(ls, 0.25);
        p.q50 = quantile(ls, 0.50);
        p.q75 = quantile(ls, 0.75);
        p.u = make_estimate(acc, truncated);
        p.truncated_fraction = p.u.truncated_fraction;
        out.push_back(std::move(p));
    }
    return out;
}

/// A Green-function bin: the part of the domain inside `box`, with its volume.
struct GreenCell {
    AxisBox box;
    double volume = 0.0;
};

struct GreenEstimate {
    std::vector<double> density;       // mean occupation time / cell volume
    std::vector<double> mean_time;     // mean occupation time per cell
    std::vector<std::int64_t> visits;  // paths that spent time in the cell
    double outside_time = 0.0;         // mean time spent outside every cell
    EstimateCI exit_time;              // same paths
};

inline std::optional<std::size_t> find_cell(const std::vector<GreenCell>& cells, const Point& p) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        bool in = true;
        for (std::size_t k = 0; k < p.size() && in; ++k) in = p[k] >= cells[i].box.lo[k] && p[k] < cells[i].box.hi[k];
        if (in) return i;
    }
    return std::nullopt;
}

/// Occupation densities before hitting B*. Each step's dt is charged to the cell of its start
/// point, so the cell times plus outside_time add up to the exit time path by path.
inline GreenEstimate estimate_green(const DomainSpec& spec, const Point& x0, const std::vector<GreenCell>& cells,
                                    const SimConfig& cfg) {
    for (const auto& c : cells) {
        if (!(c.volume > 0.0)) throw ContractViolation("green cell volume must be positive");
    }
    const Domain dom = detail::prepare(spec, x0, cfg);
    const std::size_t nc = cells.size();
    struct Blk {
        std::vector<double> time;
        std::vector<std::int64_t> visits;
        double outside = 0.0;
        detail::MomentBlock exit;
    };
    auto blocks = run_blocks<Blk>(cfg.n_paths, worker_count(cfg), [&](std::int64_t b, std::int64_t e) {
        Blk r;
        r.time.assign(nc, 0.0);
        r.visits.assign(nc, 0);
        std::vector<double> path_time(nc);
        for (std::int64_t i = b; i < e; ++i) {
            std::fill(path_time.begin(), path_time.end(), 0.0);
            double outside = 0.0;
            auto obs = [&](const Point& from, const Point&, double dt, double) {
                if (const auto c = find_cell(cells, from)) path_time[*c] += dt;
                else outside += dt;
                return false;
            };
            const PathOutcome o = run_path_observed(dom, x0, cfg, static_cast<std::uint64_t>(i), obs);
            for (std::size_t c = 0; c < nc; ++c) {
                r.time[c] += path_time[c];
                if (path_time[c] > 0.0) ++r.visits[c];
            }
            r.outside += outside;
            if (!o.absorbed) ++r.exit.truncated;
            r.exit.acc.add(o.T);
        }
        return r;
    });
    GreenEstimate g;
    g.mean_time.assign(nc, 0.0);
    g.visits.assign(nc, 0);
    BatchAccumulator acc;
    std::int64_t truncated = 0;
    for (const auto& b : blocks) {
        for (std::size_t c = 0; c < nc; ++c) {
            g.mean_time[c] += b.time[c];
            g.visits[c] += b.visits[c];
        }
        g.outside_time += b.outside;
        acc = merge(acc, b.exit.acc);
        truncated += b.exit.truncated;
    }
    const auto n = static_cast<double>(cfg.n_paths);
    for (std::size_t c = 0; c < nc; ++c) {
        g.mean_time[c] /= n;
        g.density.push_back(g.mean_time[c] / cells[c].volume);
    }
    g.outside_time /= n;
    g.exit_time = make_estimate(acc, truncated);
    return g;
}

/// Probability that reflected motion from x0 crosses cut A before cut B. B* plays no part.
/// Paths that cross neither before truncation count as misses and as truncated.
inline EstimateCI estimate_hitting_prob(const DomainSpec& spec, const Point& x0, const Cut& a, const Cut& b,
                                        const SimConfig& cfg) {
    const Domain dom = detail::prepare(spec, x0, cfg);
    const double la0 = a.level(x0), lb0 = b.level(x0);
    auto fixed = [&](double v) {
        BatchAccumulator acc;
        acc.add(v);
        EstimateCI e = make_estimate(acc, 0);
        e.n = cfg.n_paths;
        return e;
    };
    if (la0 == 0.0) return fixed(1.0);
    if (lb0 == 0.0) return fixed(0.0);
    const double sa = la0 > 0.0 ? 1.0 : -1.0, sb = lb0 > 0.0 ? 1.0 : -1.0;
    auto blocks = run_blocks<detail::MomentBlock>(cfg.n_paths, worker_count(cfg), [&](std::int64_t bb, std::int64_t e) {
        detail::MomentBlock r;
        for (std::int64_t i = bb; i < e; ++i) {
            int hit = 0;  // +1 A first, -1 B first
            auto obs = [&](const Point& from, const Point& to, double, double) {
                const double ta = sa * a.level(to), tb = sb * b.level(to);
                const bool ca = ta <= 0.0, cb = tb <= 0.0;
                if (!ca && !cb) return false;
                if (ca && cb) {
                    // Both crossed in one step: linear interpolation along the segment decides.
                    const double fa = sa * a.level(from), fb = sb * b.level(from);
                    hit = fa / (fa - ta) <= fb / (fb - tb) ? 1 : -1;
                } else {
                    hit = ca ? 1 : -1;
                }
                return true;
            };
            run_path_observed(dom, x0, cfg, static_cast<std::uint64_t>(i), obs, false);
            if (hit == 0) ++r.truncated;
            r.acc.add(hit > 0 ? 1.0 : 0.0);
        }
        return r;
    });
    BatchAccumulator acc;
    std::int64_t truncated = 0;
    for (const auto& bl : blocks) {
        acc = merge(acc, bl.acc);
        truncated += bl.truncated;
    }
    return make_estimate(acc, truncated);
}

struct HarmonicEstimate {
    std::vector<EstimateCI> probability;  // per label
    double truncated_fraction = 0.0;
    double total = 0.0;                   // sum of the label means
};

/// Walk on spheres for plain Brownian motion absorbed on the region boundary. `dist` must be a
/// lower bound on the distance to the boundary (0 outside); a walk stops once dist < eps and
/// is labelled by `label(p)`, which returns an index below n_labels.
template <class Dist, class Label>
HarmonicEstimate harmonic_measure_walk(int d, const Point& z, Dist&& dist, Label&& label, int n_labels,
                                       const SimConfig& cfg, double eps) {
    validate_config(cfg);
    if (n_labels < 1) throw ContractViolation("need at least one label");
    if (!(dist(z) > 0.0)) throw ContractViolation("harmonic measure needs an interior start point");
    const auto du = static_cast<std::size_t>(d);
    struct Blk {
        std::vector<BatchAccumulator> acc;
        std::int64_t truncated = 0;
    };
    auto blocks = run_blocks<Blk>(cfg.n_paths, worker_count(cfg), [&](std::int64_t b, std::int64_t e) {
        Blk r;
        r.acc.resize(static_cast<std::size_t>(n_labels));
        double g[kMaxDim];
        for (std::int64_t i = b; i < e; ++i) {
            const PathStream rng(cfg.seed, static_cast<std::uint64_t>(i));
            Point p = z;
            int lab = -1;
            for (std::int64_t s = 0; s < cfg.max_steps; ++s) {
                const double rad = dist(p);
                if (rad < eps) {
                    lab = label(p);
                    if (lab < 0 || lab >= n_labels) throw ContractViolation("label out of range");
                    break;
                }
                rng.normals(static_cast<std::uint64_t>(s), g, du);
                double nn = 0.0;
                for (std::size_t k = 0; k < du; ++k) nn += g[k] * g[k];
                const double f = rad / std::sqrt(nn);
                for (std::size_t k = 0; k < du; ++k) p[k] += f * g[k];
            }
            if (lab < 0) ++r.truncated;
            for (int k = 0; k < n_labels; ++k) r.acc[static_cast<std::size_t>(k)].add(k == lab ? 1.0 : 0.0);
        }
        return r;
    });
    std::vector<BatchAccumulator> acc(static_cast<std::size_t>(n_labels));
    std::int64_t truncated = 0;
    for (const auto& bl : blocks) {
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] = merge(acc[k], bl.acc[k]);
        truncated += bl.truncated;
    }
    HarmonicEstimate h;
    for (const auto& a : acc) {
        h.probability.push_back(make_estimate(a, truncated));
        h.total += h.probability.back().mean;
    }
    h.truncated_fraction = static_cast<double>(truncated) / static_cast<double>(cfg.n_paths);
    return h;
}

/// Harmonic measure of labelled boundary parts of the domain, optionally restricted to the slab
/// lo < x1 < hi (the slab faces then belong to the boundary too).
inline HarmonicEstimate harmonic_measure(const DomainSpec& spec, const Point& z,
                                         const std::function<int(const Point&)>& label, int n_labels,
                                         const SimConfig& cfg, double slab_lo = -kInf, double slab_hi = kInf,
                                         double eps = 1e-6) {
    validate(spec);
    require_simulatable(spec);
    const Domain dom(spec);
    require_dim(z, static_cast<std::size_t>(dom.dim()));
    auto dist = [&](const Point& p) {
        if (!dom.contains(p)) return 0.0;
        return std::max(0.0, std::min({dom.distance_to_boundary(p), p[0] - slab_lo, slab_hi - p[0]}));
    };
    return harmonic_measure_walk(dom.dim(), z, dist, label, n_labels, cfg, eps);
}

}  // namespace robinsim
