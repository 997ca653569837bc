// Acceptance runner: one PASS/FAIL line per criterion. Slow (mountain car and
// pendulum sweeps run twice), so it is not part of ctest.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fqilog/bfgs.hpp"
#include "fqilog/dataset.hpp"
#include "fqilog/errors.hpp"
#include "fqilog/experiment.hpp"
#include "fqilog/features.hpp"
#include "fqilog/fqi.hpp"
#include "fqilog/rng.hpp"
#include "fqilog/theory.hpp"

using namespace fqilog;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict lemma_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    TheoryOptions o;  // seed 7, 10000 pointwise, 1000 MDP-level
    const auto reports = verify_all(o);
    const double secs = seconds_since(t0);
    int failed = 0;
    std::string worst_id;
    double worst_ratio = -1e300;
    for (const auto& r : reports) {
        if (!r.pass) ++failed;
        const double ratio = r.worst_violation / r.tolerance;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_id = r.lemma_id;
        }
    }
    return {failed == 0 && secs <= 300.0,
            fmt("%zu lemma ids, %d failing, closest to its tolerance: %s (violation/tol %.3g), %.1f s", reports.size(),
                failed, worst_id.c_str(), worst_ratio, secs)};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict concentration() {
    const auto small = concentration_experiment(11, 200, 16, 0.1, 500);
    const auto large = concentration_experiment(11, 800, 16, 0.1, 500);
    const double m200 = median(small.divergences), m800 = median(large.divergences);
    const bool pass = small.coverage >= small.required_coverage && m800 <= 0.5 * m200;
    return {pass, fmt("coverage %.3f (needs %.3f), median divergence n=200 %.3g, n=800 %.3g", small.coverage,
                      small.required_coverage, m200, m800)};
}

TabularTransitions tabular_data(Rng& rng, int S, int A, int n, double gamma) {
    const auto mdp = random_mdp(rng.next_u64(), S, A, gamma);
    TabularTransitions d;
    for (int i = 0; i < n; ++i) {
        const int s = i < S * A ? i / A : static_cast<int>(rng.below(S));
        const int a = i < S * A ? i % A : static_cast<int>(rng.below(A));
        double u = rng.uniform(), acc = 0.0;
        int s2 = S - 1;
        for (int k = 0; k < S; ++k) {
            acc += mdp.p(s, a, k);
            if (u < acc) {
                s2 = k;
                break;
            }
        }
        d.states.push_back(s);
        d.actions.push_back(a);
        d.costs.push_back(rng.uniform(0.0, 1.0 - gamma));
        d.next_states.push_back(s2);
        d.terminal.push_back(0);
    }
    return d;
}

Verdict tabular_equivalence() {
    Rng rng(303);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const int S = 2 + static_cast<int>(rng.below(5)), A = 1 + static_cast<int>(rng.below(3));
        const auto d = tabular_data(rng, S, A, 80, 0.9);
        FqiConfig c;
        c.k = 10;
        c.gamma = 0.9;
        c.loss = LossKind::Log;
        const auto a = fqi_tabular(d, S, A, c);
        c.loss = LossKind::Squared;
        const auto b = fqi_tabular(d, S, A, c);
        for (int k = 0; k < 10; ++k) worst = std::max(worst, sup_norm_diff(a[k], b[k]));
    }
    return {worst <= 1e-10, fmt("20 datasets, k <= 10, largest gap %.3g", worst)};
}

Verdict tabular_consistency() {
    Rng rng(404);
    const double gamma = 0.9;
    const auto d = tabular_data(rng, 3, 2, 600, gamma);
    const auto q_hat = optimal_q_exact(empirical_mdp(d, 3, 2, gamma));
    FqiConfig c;
    c.k = 30;
    c.gamma = gamma;
    const auto it = fqi_tabular(d, 3, 2, c);
    double worst = -1e300;
    for (int k = 1; k <= 30; ++k) worst = std::max(worst, sup_norm_diff(it[k - 1], q_hat) - std::pow(gamma, k));
    return {worst <= 1e-9, fmt("max_k (||f_k - q_hat||_inf - gamma^k) = %.3g over k = 1..30", worst)};
}

Verdict gradients() {
    Rng rng(505);
    const FourierBasis basis(4, BoxBounds({-1.2, -0.07}, {0.6, 0.07}));
    double worst_rel = 0.0;
    bool finite = true;
    for (int config = 0; config < 100; ++config) {
        std::vector<double> states;
        std::vector<int> actions;
        std::vector<double> targets;
        for (int i = 0; i < 40; ++i) {
            states.push_back(rng.uniform(-1.2, 0.6));
            states.push_back(rng.uniform(-0.07, 0.07));
            actions.push_back(static_cast<int>(rng.below(3)));
            const double u = rng.uniform();
            targets.push_back(u < 0.3 ? 0.0 : (u < 0.5 ? 1.0 : rng.uniform()));
        }
        const auto batch = make_feature_batch(basis, 3, states, actions);
        Eigen::VectorXd theta(48);
        const double scale = rng.uniform(0.0, 3.0);
        for (int i = 0; i < 48; ++i) theta(i) = scale * rng.uniform(-1, 1);
        for (LossKind kind : {LossKind::Log, LossKind::Squared}) {
            const auto g = empirical_objective(batch, theta, targets, kind).second;
            for (int i = 0; i < 48; ++i) {
                const double h = 1e-5 * std::max(1.0, std::abs(theta(i)));
                Eigen::VectorXd tp = theta, tm = theta;
                tp(i) += h;
                tm(i) -= h;
                const double fd = (empirical_objective(batch, tp, targets, kind).first -
                                   empirical_objective(batch, tm, targets, kind).first) /
                                  (2 * h);
                worst_rel = std::max(worst_rel, std::abs(fd - g(i)) / std::max({1e-3, std::abs(fd), std::abs(g(i))}));
            }
            // large parameters
            Eigen::VectorXd big = theta;
            big *= 1e3 / std::max(1e-12, big.norm());
            const auto [v, gb] = empirical_objective(batch, big, targets, kind);
            finite = finite && std::isfinite(v) && gb.allFinite();
        }
    }
    return {worst_rel <= 1e-5 && finite,
            fmt("100 configurations x 2 losses, worst relative error %.3g, finite at ||theta|| = 1e3: %s", worst_rel,
                finite ? "yes" : "no")};
}

Verdict optimizer() {
    Rng rng(606);
    BfgsOptions o;
    o.grad_tol = 1e-8;
    o.wolfe_c2 = 0.1;
    int max_iters = 0, failures = 0;
    bool monotone = true;
    for (int t = 0; t < 100; ++t) {
        Eigen::MatrixXd Q(10, 10);
        Eigen::VectorXd b(10), x0(10);
        for (int i = 0; i < 10; ++i) {
            b(i) = rng.uniform(-1, 1);
            x0(i) = rng.uniform(-5, 5);
            for (int j = 0; j < 10; ++j) Q(i, j) = rng.uniform(-1, 1);
        }
        const Eigen::MatrixXd A = Q.transpose() * Q + Eigen::MatrixXd::Identity(10, 10);
        const auto r = bfgs_minimize(
            [&](const Eigen::VectorXd& x) { return std::make_pair(0.5 * x.dot(A * x) - b.dot(x), Eigen::VectorXd(A * x - b)); },
            x0, o, [&](int, double before, double after) { monotone = monotone && after <= before + 1e-12; });
        max_iters = std::max(max_iters, r.iters);
        if (!r.converged || r.iters > 15) ++failures;
    }
    BfgsOptions ro;
    ro.grad_tol = 1e-8;
    ro.max_iters = 1000;
    Eigen::VectorXd x0(2);
    x0 << -1.2, 1.0;
    const auto r = bfgs_minimize(
        [](const Eigen::VectorXd& x) {
            const double a = 1.0 - x(0), c = x(1) - x(0) * x(0);
            Eigen::VectorXd g(2);
            g << -2.0 * a - 400.0 * x(0) * c, 200.0 * c;
            return std::make_pair(a * a + 100.0 * c * c, g);
        },
        x0, ro, [&](int, double before, double after) { monotone = monotone && after <= before + 1e-12; });
    const double err = (r.x_star - Eigen::Vector2d(1.0, 1.0)).lpNorm<Eigen::Infinity>();
    return {failures == 0 && err <= 1e-5 && monotone,
            fmt("100 quadratics (c2 = 0.1): max %d iterations, %d over 15; Rosenbrock error %.2g in %d iterations; "
                "monotone: %s",
                max_iters, failures, err, r.iters, monotone ? "yes" : "no")};
}

struct Paired {
    double mean_log = 0.0, mean_sq = 0.0, t = 0.0;
    int n = 0;
};

// t statistic of sq - log across trials at one dataset size.
Paired paired(const std::vector<ResultRow>& rows, long long n_traj) {
    std::map<std::uint64_t, std::pair<double, double>> by_trial;
    for (const auto& r : rows) {
        if (r.n_trajectories != n_traj) continue;
        auto& slot = by_trial[r.trial_seed];
        (r.loss == "log" ? slot.first : slot.second) = r.value;
    }
    Paired p;
    std::vector<double> d;
    for (const auto& [seed, v] : by_trial) {
        p.mean_log += v.first;
        p.mean_sq += v.second;
        d.push_back(v.second - v.first);
    }
    p.n = static_cast<int>(d.size());
    p.mean_log /= p.n;
    p.mean_sq /= p.n;
    const auto [md, se] = mean_and_std_error(d);
    p.t = se > 0.0 ? md / se : (md > 0.0 ? INFINITY : 0.0);
    return p;
}

ExperimentOutput sweep(const char* env, const std::string& overrides, const std::string& dir) {
    auto c = Config::preset(env, "desk");
    c.merge_text(overrides);
    const auto x = resolve(c);
    fs::remove_all(dir);
    return run_experiment(x, dir);
}

Verdict mountain_car(const std::string& dir, double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = sweep("mountain_car", "dataset.n_grid=2000\n", dir);
    secs = seconds_since(t0);
    const auto p = paired(out.rows, 2000);
    const bool pass = p.mean_log <= 0.5 && p.mean_log < p.mean_sq && p.t >= 3.0;
    return {pass, fmt("n=2000, %d trials: mean cost log %.2f, squared %.2f, paired t %.2f (needs >= 3), %.0f s", p.n,
                      p.mean_log, p.mean_sq, p.t, secs)};
}

Verdict pendulum(const std::string& dir, double& secs) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = sweep("pendulum", "", dir);
    secs = seconds_since(t0);
    const auto agg = aggregate(out.rows);
    std::map<long long, std::pair<double, double>> curve;  // n -> (log, sq)
    double sum_log = 0.0, sum_sq = 0.0;
    for (const auto& a : agg) {
        (a.loss == "log" ? curve[a.n_trajectories].first : curve[a.n_trajectories].second) = a.mean;
        (a.loss == "log" ? sum_log : sum_sq) += a.mean;
    }
    bool crossing = false;
    std::string pts;
    for (const auto& [n, v] : curve) {
        if (v.first >= 0.9 && v.second < 0.9) crossing = true;
        pts += fmt(" %lld:%.2f/%.2f", n, v.first, v.second);
    }
    const double ml = sum_log / curve.size(), ms = sum_sq / curve.size();
    return {ml >= ms && crossing,
            fmt("mean balance log %.3f vs squared %.3f; log >= 0.9 where squared < 0.9: %s; n:log/sq%s; %.0f s", ml,
                ms, crossing ? "yes" : "no", pts.c_str(), secs)};
}

Verdict determinism(const std::string& root) {
    bool same = true;
    std::string detail;
    for (const char* env : {"mountain_car", "pendulum"}) {
        const std::string a = root + "/" + env + "/results.csv";
        const std::string b = root + "/" + env + "_repeat/results.csv";
        const auto out = sweep(env, std::string(env) == "mountain_car" ? "dataset.n_grid=2000\n" : "",
                               root + "/" + env + "_repeat");
        (void)out;
        const bool eq = !slurp(a).empty() && slurp(a) == slurp(b);
        same = same && eq;
        detail += fmt("%s %s; ", env, eq ? "identical" : "DIFFERENT");
    }
    return {same, detail + "results.csv compared byte for byte"};
}

Verdict round_trip(const std::string& root) {
    CollectOptions o;
    o.n_trajectories = 125;  // 125 x 800 = 1e5 transitions
    o.seed = 10;
    const auto ds = collect(mountain_car_spec(), o);
    const std::string path = root + "/roundtrip.txt";
    save_dataset(ds, path);
    const auto back = load_dataset(path, "mountain_car", mountain_car_spec().physics_hash());
    auto bits = [](const auto& a, const auto& b) {
        return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(a[0])) == 0;
    };
    const bool exact = ds.n_transitions() == 100000 && bits(ds.states, back.states) &&
                       bits(ds.next_states, back.next_states) && bits(ds.costs, back.costs) &&
                       bits(ds.actions, back.actions) && bits(ds.terminal, back.terminal) &&
                       bits(ds.steps, back.steps) && ds.episode_offsets == back.episode_offsets;
    const std::string text = serialize_dataset(ds);
    const std::size_t body = text.find('\n', text.find("checksum=")) + 1;
    Rng rng(10);
    int detected = 0;
    const int tries = 200;
    for (int i = 0; i < tries; ++i) {
        std::string bad = text;
        const std::size_t pos = body + rng.below(text.size() - body);
        bad[pos] = static_cast<char>(bad[pos] ^ (1 + rng.below(127)));
        try {
            parse_dataset(bad);
        } catch (const DataError&) {
            ++detected;
        }
    }
    return {exact && detected == tries,
            fmt("%zu transitions bit-exact: %s; %d/%d single-byte corruptions rejected", ds.n_transitions(),
                exact ? "yes" : "no", detected, tries)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string root = argc > 1 ? argv[1] : "acceptance_out";
    fs::create_directories(root);
    int failed = 0;
    auto report = [&](int id, const std::function<Verdict()>& fn) {
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failed;
        std::printf("criterion %2d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
    };
    double mc_secs = 0.0, pd_secs = 0.0;
    report(1, lemma_suite);
    report(2, concentration);
    report(3, tabular_equivalence);
    report(4, tabular_consistency);
    report(5, gradients);
    report(6, optimizer);
    report(7, [&] { return mountain_car(root + "/mountain_car", mc_secs); });
    report(8, [&] { return pendulum(root + "/pendulum", pd_secs); });
    report(9, [&] { return determinism(root); });
    report(10, [&] { return round_trip(root); });
    std::printf("%d of 10 criteria pass\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
