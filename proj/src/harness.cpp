#include "abc2d/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace abc2d {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!trim(item).empty()) out.push_back(trim(item));
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("cannot read " + what + " from '" + s + "'");
    }
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string run_key(const std::string& medium, const std::string& variant, std::uint64_t seed, double L,
                    AlgorithmKind kind, const RunOptions& o) {
    std::ostringstream k;
    k.precision(17);
    k << medium << '|' << variant << '|' << seed << '|' << L << '|' << to_string(kind) << '|' << o.h << '|'
      << o.solve.relative_residual_tolerance << '|' << o.observation_radius << '|' << o.beta;
    return k.str();
}

using MediumFactory = std::function<std::unique_ptr<Medium>()>;

// Fetches runs for the requested kinds, computing the missing ones together
// so that they share one corrector solve.
std::vector<RunRecord> obtain_runs(const ExperimentConfig& config, const MediumFactory& make, std::uint64_t seed,
                                   double L, const std::string& variant, const std::vector<AlgorithmKind>& kinds,
                                   bool rstar, RunCache* cache) {
    RunOptions opt = config.run_options();
    opt.compute_rstar = rstar;
    const std::string tag = config.medium.tag();
    std::vector<std::optional<RunRecord>> found(kinds.size());
    std::vector<AlgorithmKind> missing;
    for (std::size_t k = 0; k < kinds.size(); ++k) {
        if (cache)
            if (auto hit = cache->find(run_key(tag, variant, seed, L, kinds[k], opt)))
                if (!rstar || !needs_correctors(kinds[k]) || hit->front().meta.rstar) found[k] = hit->front();
        if (!found[k]) missing.push_back(kinds[k]);
    }
    if (!missing.empty()) {
        const auto medium = make();
        auto runs = run_algorithms(missing, *medium, L, opt);
        for (auto& r : runs) {
            RunRecord rec{seed, L, tag, variant, std::move(r.meta)};
            rec.meta.seed = seed;
            if (cache) cache->store(run_key(tag, variant, seed, L, rec.meta.kind, opt), {rec});
            for (std::size_t k = 0; k < kinds.size(); ++k)
                if (kinds[k] == rec.meta.kind && !found[k]) found[k] = rec;
        }
    }
    std::vector<RunRecord> out;
    for (auto& f : found) out.push_back(std::move(*f));
    return out;
}

MediumFactory factory(const ExperimentConfig& config, std::uint64_t seed, double L) {
    return [&config, seed, L] { return make_medium(config.medium, seed, 2.0 * L + 1.0); };
}

void check_ladder(const std::vector<double>& L) {
    if (L.empty()) throw InvalidArgument("L ladder is empty");
    for (std::size_t k = 1; k < L.size(); ++k)
        if (!(L[k] > L[k - 1])) throw InvalidArgument("L values must be strictly ascending");
}

} // namespace

// ---------------------------------------------------------------------------

MediumSpec MediumSpec::parse(const std::string& text) {
    MediumSpec s;
    const auto colon = text.find(':');
    const std::string name = trim(text.substr(0, colon));
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    const auto values = split(args, ',');
    if (name == "poisson" && values.empty()) {
        s.kind = Kind::poisson;
    } else if (name == "constant" && values.size() == 1) {
        s.kind = Kind::constant;
        s.alpha = parse_double(values[0], "constant value");
    } else if (name == "laminate" && values.size() == 2) {
        s.kind = Kind::laminate;
        s.alpha = parse_double(values[0], "laminate phase");
        s.beta = parse_double(values[1], "laminate phase");
    } else {
        throw InvalidArgument("unknown medium '" + text + "' (poisson, constant:<c>, laminate:<a>,<b>)");
    }
    return s;
}

std::string MediumSpec::tag() const {
    std::ostringstream s;
    s.precision(17);
    switch (kind) {
    case Kind::poisson: return "poisson";
    case Kind::constant: s << "constant:" << alpha; break;
    case Kind::laminate: s << "laminate:" << alpha << ',' << beta; break;
    }
    return s.str();
}

std::unique_ptr<Medium> make_medium(const MediumSpec& spec, std::uint64_t seed, double half_width) {
    switch (spec.kind) {
    case MediumSpec::Kind::constant: return std::make_unique<ConstantMedium>(spec.alpha);
    case MediumSpec::Kind::laminate: return std::make_unique<LaminateMedium>(spec.alpha, spec.beta);
    case MediumSpec::Kind::poisson: break;
    }
    PointProcessConfig cfg;
    cfg.master_seed = seed;
    return std::make_unique<PoissonMedium>(PoissonMedium::sample(cfg, Box::centered_cube(half_width)));
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& s : split(text, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stoull(s, &pos, 0));
            if (pos != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw InvalidArgument("cannot read seed from '" + s + "'");
        }
    }
    if (out.empty()) throw InvalidArgument("empty seed list");
    return out;
}

std::vector<double> parse_length_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& s : split(text, ',')) out.push_back(parse_double(s, "length"));
    if (out.empty()) throw InvalidArgument("empty length list");
    std::sort(out.begin(), out.end());
    return out;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (key == "seeds") c.seeds = parse_seed_list(v);
    else if (key == "L_values") c.L_values = parse_length_list(v);
    else if (key == "h") c.h = parse_double(v, key);
    else if (key == "beta") c.beta = parse_double(v, key);
    else if (key == "algorithms") {
        c.algorithms.clear();
        for (const auto& a : split(v, ',')) c.algorithms.push_back(parse_algorithm(a));
    } else if (key == "reference_L") c.reference_L = parse_double(v, key);
    else if (key == "resample_count") c.resample_count = static_cast<int>(parse_double(v, key));
    else if (key == "output_dir") c.output_dir = v;
    else if (key == "workers") c.workers = static_cast<int>(parse_double(v, key));
    else if (key == "solver_tolerance") c.solver_tolerance = parse_double(v, key);
    else if (key == "observation_radius") c.observation_radius = parse_double(v, key);
    else if (key == "memory_budget_gb") c.memory_budget_gb = parse_double(v, key);
    else if (key == "medium") c.medium = MediumSpec::parse(v);
    else throw InvalidArgument("unknown config key '" + key + "'");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path.string());
    ExperimentConfig c;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument(path.string() + ":" + std::to_string(n) + ": expected key = value");
        apply_setting(c, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return c;
}

std::string describe(const ExperimentConfig& c) {
    std::ostringstream s;
    s.precision(17);
    s << "seeds =";
    for (std::size_t k = 0; k < c.seeds.size(); ++k) s << (k ? "," : " ") << c.seeds[k];
    s << "\nL_values =";
    for (std::size_t k = 0; k < c.L_values.size(); ++k) s << (k ? "," : " ") << c.L_values[k];
    s << "\nh = " << c.h << "\nbeta = " << c.beta << "\nalgorithms =";
    for (std::size_t k = 0; k < c.algorithms.size(); ++k) s << (k ? "," : " ") << to_string(c.algorithms[k]);
    s << "\nreference_L = ";
    if (c.reference_L) s << *c.reference_L;
    s << "\nresample_count = " << c.resample_count << "\noutput_dir = " << c.output_dir.string()
      << "\nworkers = " << c.workers << "\nsolver_tolerance = " << c.solver_tolerance
      << "\nobservation_radius = " << c.observation_radius << "\nmemory_budget_gb = " << c.memory_budget_gb
      << "\nmedium = " << c.medium.tag() << '\n';
    return s.str();
}

double estimated_run_bytes(double L, double h, bool with_correctors) {
    const double side = (with_correctors ? 4.0 : 2.0) * L / h + 1.0;
    // two float face arrays, three double grid vectors, multigrid levels
    return side * side * (8.0 + 24.0 + 6.0);
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw InvalidArgument("no seeds");
    check_ladder(L_values);
    if (!(h > 0.0)) throw InvalidArgument("h must be positive");
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in (0, 1)");
    if (workers < 1) throw InvalidArgument("workers must be at least 1");
    if (resample_count < 0) throw InvalidArgument("resample_count must be non-negative");
    if (!(solver_tolerance > 0.0)) throw InvalidArgument("solver tolerance must be positive");
    if (algorithms.empty()) throw InvalidArgument("no algorithms selected");
    double largest = L_values.back();
    if (reference_L) largest = std::max(largest, *reference_L);
    const double need = workers * estimated_run_bytes(largest, h, true);
    if (need > memory_budget_gb * 1e9) {
        std::ostringstream msg;
        msg << "runs at L = " << largest << " need about " << need / 1e9 << " GB with " << workers
            << " worker(s); budget is " << memory_budget_gb << " GB";
        throw InvalidArgument(msg.str());
    }
}

RunOptions ExperimentConfig::run_options() const {
    RunOptions o;
    o.h = h;
    o.beta = beta;
    o.observation_radius = observation_radius;
    o.solve.relative_residual_tolerance = solver_tolerance;
    return o;
}

std::vector<std::string> run_parallel(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
    std::vector<std::string> errors(count);
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
            try {
                task(i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                if (errors[i].empty()) errors[i] = "unknown error";
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (n == 1) {
        loop();
        return errors;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(loop);
    for (auto& t : pool) t.join();
    return errors;
}

std::optional<std::vector<RunRecord>> RunCache::find(const std::string& key) const {
    std::lock_guard lock(mutex_);
    const auto it = runs_.find(key);
    if (it == runs_.end()) return std::nullopt;
    return it->second;
}

void RunCache::store(const std::string& key, std::vector<RunRecord> runs) {
    std::lock_guard lock(mutex_);
    runs_[key] = std::move(runs);
}

std::size_t RunCache::size() const {
    std::lock_guard lock(mutex_);
    return runs_.size();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0 && y[k] > 0.0)) throw InvalidArgument("log-log fit needs positive data");
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = std::log(x[k]) - mx;
        sxy += dx * (std::log(y[k]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

std::uint64_t resample_seed(std::uint64_t seed, double keep, int k) {
    std::uint64_t s = splitmix(splitmix(seed ^ 0x5e5a3b1ed0c0ffeeULL) + static_cast<std::uint64_t>(std::llround(keep * 16)));
    s = splitmix(s + static_cast<std::uint64_t>(k));
    return s == seed ? s + 1 : s;
}

// ---------------------------------------------------------------------------

AhomStudy run_ahom_study(const ExperimentConfig& config) {
    config.validate();
    if (config.L_values.size() < 2) throw InvalidArgument("a_h study needs at least two L values");
    struct Job {
        std::uint64_t seed;
        double L;
    };
    std::vector<Job> jobs;
    for (auto s : config.seeds)
        for (double L : config.L_values) jobs.push_back({s, L});
    std::vector<std::optional<AhomRow>> rows(jobs.size());
    const RunOptions opt = config.run_options();
    const auto errors = run_parallel(jobs.size(), config.workers, [&](std::size_t i) {
        const auto medium = make_medium(config.medium, jobs[i].seed, 2.0 * jobs[i].L + 1.0);
        const auto c = summarize_correctors(*medium, jobs[i].L, opt);
        rows[i] = AhomRow{jobs[i].seed, jobs[i].L, c.a_h, c.seconds,
                          c.phi_reports[0].iterations + c.phi_reports[1].iterations};
    });
    AhomStudy study;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (rows[i]) study.rows.push_back(*rows[i]);
        else study.failures.push_back({jobs[i].seed, jobs[i].L, "correctors", errors[i]});
    }
    return study;
}

std::vector<AhomDifference> ahom_differences(const std::vector<AhomRow>& rows) {
    std::vector<AhomDifference> out;
    for (const auto& a : rows)
        for (const auto& b : rows)
            if (a.seed == b.seed && b.L == 2.0 * a.L)
                out.push_back({a.seed, a.L, (b.a_h.matrix - a.a_h.matrix).cwiseAbs()});
    return out;
}

std::vector<GradientDifference> gradient_differences(const std::vector<RunRecord>& runs) {
    std::vector<GradientDifference> out;
    for (const auto& a : runs)
        for (const auto& b : runs)
            if (a.seed == b.seed && a.variant == b.variant && a.meta.kind == b.meta.kind && b.L == 2.0 * a.L)
                out.push_back({a.seed, a.meta.kind, a.L,
                               (b.meta.gradient.pointwise - a.meta.gradient.pointwise).norm(),
                               (b.meta.gradient.ball_average - a.meta.gradient.ball_average).norm()});
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return std::tie(x.seed, x.kind, x.L) < std::tie(y.seed, y.kind, y.L);
    });
    return out;
}

std::vector<RateFit> fit_rates(const std::vector<GradientDifference>& diffs) {
    std::map<std::pair<std::uint64_t, AlgorithmKind>, std::vector<const GradientDifference*>> groups;
    for (const auto& d : diffs) groups[{d.seed, d.kind}].push_back(&d);
    std::vector<RateFit> out;
    for (auto& [key, g] : groups) {
        std::sort(g.begin(), g.end(), [](auto* a, auto* b) { return a->L < b->L; });
        // The smallest box is pre-asymptotic and left out of the fit.
        std::vector<double> x, y;
        for (std::size_t k = g.size() > 2 ? 1 : 0; k < g.size(); ++k) {
            x.push_back(g[k]->L);
            y.push_back(g[k]->difference);
        }
        if (x.size() < 2) continue;
        out.push_back({key.first, key.second, loglog_slope(x, y), static_cast<int>(x.size())});
    }
    return out;
}

ConvergenceStudy run_convergence_study(const ExperimentConfig& config, RunCache* cache) {
    config.validate();
    if (config.L_values.size() < 2) throw InvalidArgument("convergence study needs at least two L values");
    struct Job {
        std::uint64_t seed;
        double L;
    };
    std::vector<Job> jobs;
    for (auto s : config.seeds)
        for (double L : config.L_values) jobs.push_back({s, L});
    std::vector<std::vector<RunRecord>> results(jobs.size());
    const auto errors = run_parallel(jobs.size(), config.workers, [&](std::size_t i) {
        results[i] = obtain_runs(config, factory(config, jobs[i].seed, jobs[i].L), jobs[i].seed, jobs[i].L, "",
                                 config.algorithms, false, cache);
    });
    ConvergenceStudy study;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i].empty()) study.failures.push_back({jobs[i].seed, jobs[i].L, "algorithms", errors[i]});
        for (auto& r : results[i]) study.runs.push_back(std::move(r));
    }
    study.differences = gradient_differences(study.runs);
    study.slopes = fit_rates(study.differences);
    return study;
}

SensitivityStudy run_sensitivity_study(const ExperimentConfig& config, RunCache* cache) {
    config.validate();
    if (!config.reference_L) throw InvalidArgument("sensitivity study needs reference_L");
    const double ref = *config.reference_L;
    if (!(ref > config.L_values.back())) throw InvalidArgument("reference_L must exceed every study L");
    if (config.resample_count < 1) throw InvalidArgument("sensitivity study needs resample_count >= 1");
    if (config.medium.kind != MediumSpec::Kind::poisson)
        throw InvalidArgument("re-sampling needs the Poisson medium");
    const std::vector<AlgorithmKind> full{AlgorithmKind::full};

    struct Job {
        std::uint64_t seed;
        double L;      // study L (or the reference L)
        int row;       // -1 reference, 0 algorithm, k redraw
        std::uint64_t redraw;
    };
    std::vector<Job> jobs;
    for (auto s : config.seeds) {
        jobs.push_back({s, ref, -1, 0});
        for (double L : config.L_values) {
            jobs.push_back({s, L, 0, 0});
            for (int k = 1; k <= config.resample_count; ++k) jobs.push_back({s, L, k, resample_seed(s, 2.0 * L, k)});
        }
    }
    std::vector<std::optional<RunRecord>> results(jobs.size());
    const auto errors = run_parallel(jobs.size(), config.workers, [&](std::size_t i) {
        const Job& j = jobs[i];
        if (j.row <= 0) {
            results[i] = obtain_runs(config, factory(config, j.seed, j.L), j.seed, j.L, "", full, false, cache)[0];
            return;
        }
        std::ostringstream variant;
        variant << "resampled outside Q_" << 2.0 * j.L << " seed " << j.redraw;
        MediumFactory make = [&config, &j, ref] {
            PointProcessConfig cfg;
            cfg.master_seed = j.seed;
            const auto base = PoissonMedium::sample(cfg, Box::centered_cube(2.0 * ref + 1.0));
            return std::make_unique<PoissonMedium>(resample_outside(base, 2.0 * j.L, j.redraw));
        };
        results[i] = obtain_runs(config, make, j.seed, ref, variant.str(), full, false, cache)[0];
    });

    SensitivityStudy study;
    std::map<std::uint64_t, Vec2> reference;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i].empty()) {
            if (jobs[i].row < 0) throw Error("reference solve failed: " + errors[i]);
            study.failures.push_back({jobs[i].seed, jobs[i].L, jobs[i].row == 0 ? "algorithm" : "redraw", errors[i]});
            continue;
        }
        if (jobs[i].row < 0) {
            reference[jobs[i].seed] = results[i]->meta.gradient.pointwise;
            study.reference.push_back(*results[i]);
        } else {
            study.runs.push_back(*results[i]);
        }
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (jobs[i].row < 0 || !results[i]) continue;
        const Vec2 d = results[i]->meta.gradient.pointwise - reference.at(jobs[i].seed);
        study.entries.push_back({jobs[i].seed, jobs[i].L, jobs[i].row, jobs[i].redraw, d.norm()});
    }
    std::sort(study.entries.begin(), study.entries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.seed, a.row, a.L) < std::tie(b.seed, b.row, b.L);
    });
    return study;
}

RStarStudy run_rstar_study(const ExperimentConfig& config, RunCache* cache) {
    config.validate();
    const std::vector<AlgorithmKind> full{AlgorithmKind::full};
    struct Job {
        std::uint64_t seed;
        double L;
    };
    std::vector<Job> jobs;
    for (auto s : config.seeds)
        for (double L : config.L_values) jobs.push_back({s, L});
    std::vector<std::optional<RunRecord>> results(jobs.size());
    const auto errors = run_parallel(jobs.size(), config.workers, [&](std::size_t i) {
        results[i] = obtain_runs(config, factory(config, jobs[i].seed, jobs[i].L), jobs[i].seed, jobs[i].L, "", full,
                                 true, cache)[0];
    });
    RStarStudy study;
    std::vector<RunRecord> runs;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (results[i]) runs.push_back(*results[i]);
        else study.failures.push_back({jobs[i].seed, jobs[i].L, "r_star", errors[i]});
    }
    const auto diffs = gradient_differences(runs);
    const double ell = config.run_options().source.support_radius;
    for (const auto& r : runs) {
        RStarRow row{r.seed, r.L, *r.meta.rstar, 0.0, std::nullopt};
        row.predicted = std::pow(ell / r.L, 2) * std::pow(row.estimate.r_star / r.L, config.beta);
        for (const auto& d : diffs)
            if (d.seed == r.seed && d.L == r.L) row.measured = d.difference;
        study.rows.push_back(std::move(row));
    }
    return study;
}

} // namespace abc2d
