#include "exitfem/mc.hpp"

#include "exitfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

namespace exitfem {

bool cholesky_inplace(std::span<double> m, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= m[j * n + k] * m[j * n + k];
        if (!(diag > 0.0)) return false;
        const double ljj = std::sqrt(diag);
        m[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= m[i * n + k] * m[j * n + k];
            m[i * n + j] = s / ljj;
        }
        for (std::size_t k = j + 1; k < n; ++k) m[j * n + k] = 0.0;
    }
    return true;
}

std::vector<double> cholesky_at(const SdeModel& model, std::span<const double> point) {
    const std::size_t d = model.dimension();
    std::vector<double> a(d * d);
    model.diffusion_at(point, a);
    std::vector<double> l = a;
    if (!cholesky_inplace(l, d)) {
        std::ostringstream os;
        os << "diffusion matrix is not positive definite at "
           << format_point({point.begin(), point.end()}) << ": [";
        for (std::size_t i = 0; i < a.size(); ++i) os << (i ? ", " : "") << a[i];
        os << "]";
        throw SolverError(os.str());
    }
    return l;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

enum class PathOutcome : std::uint8_t { Exited, Censored, Aborted };

struct PathResult {
    double time = 0.0;
    PathOutcome outcome = PathOutcome::Exited;
};

PathResult run_path(const SdeModel& model, const BoxDomain& domain, std::span<const double> start,
                    const SimulationConfig& cfg, std::size_t path, std::string* error) {
    const std::size_t d = model.dimension();
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(path))));
    std::normal_distribution<double> normal;
    std::array<double, kMaxDim> y{}, b{}, xi{};
    std::array<double, kMaxDim * kMaxDim> l{};
    std::copy(start.begin(), start.end(), y.begin());
    const std::span<const double> ys(y.data(), d);
    const double sqdt = std::sqrt(cfg.dt);
    const auto max_steps = static_cast<std::uint64_t>(std::ceil(cfg.time_cap / cfg.dt));
    for (std::uint64_t step = 1; step <= max_steps; ++step) {
        try {
            model.drift_at(ys, std::span<double>(b.data(), d));
            model.diffusion_at(ys, std::span<double>(l.data(), d * d));
        } catch (const EvaluationError& e) {
            if (error) *error = e.what();
            return {static_cast<double>(step) * cfg.dt, PathOutcome::Aborted};
        }
        if (!cholesky_inplace(std::span<double>(l.data(), d * d), d)) {
            if (error) *error = "diffusion matrix not positive definite at " + format_point({ys.begin(), ys.end()});
            return {static_cast<double>(step) * cfg.dt, PathOutcome::Aborted};
        }
        for (std::size_t i = 0; i < d; ++i) xi[i] = normal(rng);
        for (std::size_t i = 0; i < d; ++i) {
            double noise = 0.0;
            for (std::size_t j = 0; j <= i; ++j) noise += l[i * d + j] * xi[j];
            y[i] += b[i] * cfg.dt + sqdt * noise;
        }
        if (!domain.contains_open(ys)) return {static_cast<double>(step) * cfg.dt, PathOutcome::Exited};
    }
    return {static_cast<double>(max_steps) * cfg.dt, PathOutcome::Censored};
}

}  // namespace

ExitStats simulate_exit(const SdeModel& model, const BoxDomain& domain, std::span<const double> start,
                        const SimulationConfig& config) {
    if (!(config.dt > 0.0)) throw ConfigError("simulation dt must be positive");
    if (config.paths < 1) throw ConfigError("simulation needs at least one path");
    if (!(config.time_cap > 0.0)) throw ConfigError("simulation time cap must be positive");
    if (model.dimension() != domain.dimension() || start.size() != domain.dimension()) {
        throw ConfigError("model, domain and start point dimensions differ");
    }
    if (!domain.contains_open(start)) {
        throw ConfigError("start point " + format_point({start.begin(), start.end()}) +
                          " is not strictly inside the domain");
    }

    std::vector<PathResult> results(config.paths);
    std::vector<std::string> errors(config.paths);
    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.paths)));
    auto worker = [&](unsigned tid) {
        for (std::size_t i = tid; i < config.paths; i += threads) {
            results[i] = run_path(model, domain, start, config, i, &errors[i]);
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    }

    // Reductions run in path order, independent of the thread schedule.
    ExitStats stats;
    stats.seed = config.seed;
    stats.dt = config.dt;
    double sum = 0.0;
    for (std::size_t i = 0; i < config.paths; ++i) {
        switch (results[i].outcome) {
            case PathOutcome::Exited:
                ++stats.exited;
                sum += results[i].time;
                break;
            case PathOutcome::Censored: ++stats.censored; break;
            case PathOutcome::Aborted:
                ++stats.aborted;
                if (stats.errors.size() < 8) stats.errors.push_back("path " + std::to_string(i) + ": " + errors[i]);
                break;
        }
    }
    if (stats.exited > 0) {
        stats.mean = sum / static_cast<double>(stats.exited);
        double ss = 0.0;
        for (const auto& r : results) {
            if (r.outcome == PathOutcome::Exited) ss += (r.time - stats.mean) * (r.time - stats.mean);
        }
        stats.stddev = stats.exited > 1 ? std::sqrt(ss / static_cast<double>(stats.exited - 1)) : 0.0;
        stats.std_error = stats.stddev / std::sqrt(static_cast<double>(stats.exited));
    } else {
        stats.mean = std::numeric_limits<double>::quiet_NaN();
    }

    std::vector<double> times = config.survival_times;
    std::sort(times.begin(), times.end());
    const std::size_t usable = stats.exited + stats.censored;
    for (double t : times) {
        std::size_t alive = 0;
        for (const auto& r : results) {
            if (r.outcome == PathOutcome::Censored || (r.outcome == PathOutcome::Exited && r.time > t)) ++alive;
        }
        stats.survival_times.push_back(t);
        stats.survival_values.push_back(usable ? static_cast<double>(alive) / static_cast<double>(usable) : 0.0);
    }
    return stats;
}

double monitoring_bias_fraction(const SdeModel& model, const BoxDomain& domain,
                                std::span<const double> start, double dt, std::size_t samples_per_axis) {
    const std::size_t d = domain.dimension();
    std::vector<double> amax(d, 0.0), a(d * d), p(d);
    std::vector<std::size_t> idx(d, 0);
    const std::size_t n = std::max<std::size_t>(samples_per_axis, 2);
    for (;;) {
        for (std::size_t i = 0; i < d; ++i) {
            p[i] = domain.lower(i) + static_cast<double>(idx[i] + 1) / static_cast<double>(n + 1) * domain.extent(i);
        }
        model.diffusion_at(p, a);
        for (std::size_t i = 0; i < d; ++i) amax[i] = std::max(amax[i], a[i * d + i]);
        std::size_t axis = 0;
        while (axis < d && ++idx[axis] == n) idx[axis++] = 0;
        if (axis == d) break;
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double delta = kMonitoringShift * std::sqrt(dt * amax[i]);
        const double lo = start[i] - domain.lower(i), hi = domain.upper(i) - start[i];
        // (lo + delta)(hi + delta) / (lo hi) - 1
        worst = std::max(worst, delta * (1.0 / lo + 1.0 / hi) + delta * delta / (lo * hi));
    }
    return worst;
}

ComparisonReport compare(double fem_value, const ExitStats& stats, double z_threshold, double bias_allowance) {
    ComparisonReport r;
    r.fem_value = fem_value;
    r.mc_mean = stats.mean;
    r.std_error = stats.std_error;
    r.z_threshold = z_threshold;
    r.bias_allowance = bias_allowance;
    const double diff = fem_value - stats.mean;
    if (!stats.has_mean()) {
        r.note = "no uncensored paths; comparison unavailable";
        return r;
    }
    r.z = stats.std_error > 0.0 ? diff / stats.std_error : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    r.pass = std::abs(diff) <= z_threshold * stats.std_error + bias_allowance;
    r.note = "discrete exit checks overestimate exit times by O(sqrt(dt)); a negative z is the expected bias direction";
    return r;
}

}  // namespace exitfem
