// Command-line front end for the free-convolution library. Every
// subcommand validates its inputs, runs one library pipeline, writes its
// artifacts into the output directory, and finishes with a manifest JSON
// recording the fully resolved configuration plus a checksum per output,
// so any published number can be reproduced byte for byte from the
// manifest alone.
//
// Exit codes: 0 success, 1 validation or configuration error, 2 numerical
// failure (solver did not converge beyond the tolerated fraction, empty
// selection, and similar).

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "boxplus/bulk.hpp"
#include "boxplus/ensemble.hpp"
#include "boxplus/errors.hpp"
#include "boxplus/haar.hpp"
#include "boxplus/io.hpp"
#include "boxplus/locallaw.hpp"
#include "boxplus/measure.hpp"
#include "boxplus/rng.hpp"
#include "boxplus/subordination.hpp"
#include "boxplus/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace boxplus;

namespace {

// Fixed default seed so that runs without an explicit --seed are still
// reproducible across machines.
constexpr std::uint64_t kDefaultSeed = 271828;

std::string default_out_root() {
    if (const char* env = std::getenv("BOXPLUS_OUT")) return env;
    return ".";
}

// Collects artifacts for one run and writes the closing manifest.
class Run {
  public:
    explicit Run(const std::string& out_dir) : dir_(out_dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec)
            throw DomainError("cannot create output directory '" +
                              dir_.string() + "'");
    }

    void emit(const std::string& name, const std::string& content) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f)
            throw DomainError("cannot open output file '" +
                              (dir_ / name).string() + "'");
        f << content;
        f.flush();
        if (!f)
            throw DomainError("failed writing output file '" +
                              (dir_ / name).string() + "'");
        outputs_.push_back({{"file", name},
                            {"bytes", content.size()},
                            {"fnv1a64", hex64(fnv1a64(content))}});
    }

    void manifest(const std::string& command, json config) {
        json m{{"command", command},
               {"config", std::move(config)},
               {"outputs", outputs_}};
        std::ofstream f(dir_ / (command + "_manifest.json"),
                        std::ios::binary);
        if (!f) throw DomainError("cannot write manifest");
        f << m.dump(2) << '\n';
    }

    const fs::path& dir() const { return dir_; }

  private:
    fs::path dir_;
    json outputs_ = json::array();
};

// Warm-started solve with a cold retry, updating the warm state on
// success. Returns the pair; the caller checks .converged.
SubordinationPair chained_solve(const DiscreteMeasure& mu1,
                                const DiscreteMeasure& mu2, HalfPlanePoint z,
                                SolveOptions& opts) {
    SubordinationPair pair = solve_subordination(mu1, mu2, z, opts);
    if (!pair.converged && (opts.omega1_init || opts.omega2_init)) {
        SolveOptions cold = opts;
        cold.omega1_init.reset();
        cold.omega2_init.reset();
        pair = solve_subordination(mu1, mu2, z, cold);
    }
    if (pair.converged) {
        opts.omega1_init = pair.omega1;
        opts.omega2_init = pair.omega2;
    } else {
        opts.omega1_init.reset();
        opts.omega2_init.reset();
    }
    return pair;
}

Field parse_field(const std::string& name) {
    if (name == "unitary") return Field::unitary;
    if (name == "orthogonal") return Field::orthogonal;
    throw DomainError("field must be 'unitary' or 'orthogonal', got '" +
                      name + "'");
}

// Resolve one side of an ensemble spec ("a_spec"/"b_spec") to an explicit
// diagonal list of length n. Accepted forms: explicit array of reals,
// {"two_point": {"locations": [..], "weights": [..]}}, or
// {"quantile_of": "measure-file.txt"}; the measure forms fill the
// diagonal with quantiles at (i - 1/2)/n.
std::vector<double> resolve_diagonal_spec(const json& spec,
                                          Eigen::Index n,
                                          const fs::path& base_dir,
                                          const std::string& which) {
    if (spec.is_array()) {
        auto list = spec.get<std::vector<double>>();
        if (Eigen::Index(list.size()) != n)
            throw ParseError(which + ": explicit list has " +
                             std::to_string(list.size()) +
                             " entries, expected " + std::to_string(n));
        return list;
    }
    if (spec.is_object() && spec.contains("two_point")) {
        const auto& tp = spec.at("two_point");
        const DiscreteMeasure mu(
            tp.at("locations").get<std::vector<double>>(),
            tp.at("weights").get<std::vector<double>>());
        return diagonal_from_measure(mu, n);
    }
    if (spec.is_object() && spec.contains("quantile_of")) {
        const fs::path rel = spec.at("quantile_of").get<std::string>();
        const fs::path path = rel.is_absolute() ? rel : base_dir / rel;
        return diagonal_from_measure(read_measure_file(path.string()), n);
    }
    throw ParseError(which +
                     ": expected an array, a 'two_point' object, or a "
                     "'quantile_of' path");
}

struct LoadedEnsemble {
    EnsembleConfig config;
    std::uint64_t seed = kDefaultSeed;
};

LoadedEnsemble load_ensemble_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    json spec;
    try {
        in >> spec;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }

    try {
        const auto n = spec.at("N").get<Eigen::Index>();
        if (n < 2) throw DomainError("N must be >= 2");
        const fs::path base = fs::path(path).parent_path();
        auto a = resolve_diagonal_spec(spec.at("a_spec"), n, base, "a_spec");
        auto b = resolve_diagonal_spec(spec.at("b_spec"), n, base, "b_spec");
        const Field field =
            parse_field(spec.value("field", std::string("unitary")));
        const bool center = spec.value("center", false);

        LoadedEnsemble out;
        out.config = ensemble_config(std::move(a), std::move(b), field,
                                     center);
        out.seed = spec.value("seed", kDefaultSeed);
        return out;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
}

json config_to_json(const EnsembleConfig& cfg, std::uint64_t seed) {
    return json{{"N", cfg.n},
                {"a", cfg.a},
                {"b", cfg.b},
                {"field", field_name(cfg.field)},
                {"center", cfg.center},
                {"seed", seed}};
}

json fit_to_json(const LocalLawReport& rep, ErrorKind kind) {
    try {
        const auto fit = fit_exponent(rep, kind);
        return json{{"slope", fit.slope},
                    {"intercept", fit.intercept},
                    {"r2", fit.r2},
                    {"n_points", fit.n_points}};
    } catch (const InsufficientData& e) {
        return json{{"error", e.what()}};
    }
}

// ---------------------------------------------------------------------------
// Subcommand implementations. Each returns the process exit code.

struct CommonFlags {
    std::string out = default_out_root();
    std::uint64_t seed = kDefaultSeed;
    double tol = 1e-12;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

int cmd_convolve(const std::string& mu1_path, const std::string& mu2_path,
                 double lo, double hi, std::size_t points, double eta,
                 const CommonFlags& common) {
    if (!(lo < hi)) throw DomainError("interval must satisfy lo < hi");
    if (points < 2) throw DomainError("need at least two grid points");
    if (!(eta > 0.0)) throw DomainError("eta must be positive");

    const auto mu1 = read_measure_file(mu1_path);
    const auto mu2 = read_measure_file(mu2_path);

    SolveOptions opts;
    opts.tol = common.tol;
    std::ostringstream csv;
    csv << "E,eta,re_m,im_m,density\n";
    std::size_t failures = 0;
    for (std::size_t i = 0; i < points; ++i) {
        const double e =
            lo + (hi - lo) * double(i) / double(points - 1);
        const auto pair =
            chained_solve(mu1, mu2, HalfPlanePoint(e, eta), opts);
        if (!pair.converged) {
            ++failures;
            continue;
        }
        const complex_t m = stieltjes(
            mu1, HalfPlanePoint(pair.omega2.real(), pair.omega2.imag()));
        csv << csv_double(e) << ',' << csv_double(eta) << ','
            << csv_double(m.real()) << ',' << csv_double(m.imag()) << ','
            << csv_double(m.imag() / 3.14159265358979323846) << '\n';
    }

    Run run(common.out);
    run.emit("density.csv", csv.str());
    run.manifest("convolve",
                 json{{"mu1", mu1_path},
                      {"mu2", mu2_path},
                      {"interval", {lo, hi}},
                      {"points", points},
                      {"eta", eta},
                      {"tol", common.tol},
                      {"failed_points", failures}});
    if (failures > 0) {
        std::cerr << "error: subordination solver failed at " << failures
                  << " of " << points << " grid points\n";
        return 2;
    }
    std::cout << "density.csv: " << points << " rows" << '\n';
    return 0;
}

int cmd_subordinate(const std::string& mu1_path, const std::string& mu2_path,
                    double re, double im, const CommonFlags& common) {
    if (!(im > 0.0)) throw DomainError("Im z must be positive");
    const auto mu1 = read_measure_file(mu1_path);
    const auto mu2 = read_measure_file(mu2_path);

    SolveOptions opts;
    opts.tol = common.tol;
    const HalfPlanePoint z(re, im);
    const auto pair = solve_subordination(mu1, mu2, z, opts);
    if (!pair.converged) {
        std::cerr << "error: solver did not converge at z = (" << re << ", "
                  << im << "), residual " << pair.residual << '\n';
        return 2;
    }
    const complex_t m = stieltjes(
        mu1, HalfPlanePoint(pair.omega2.real(), pair.omega2.imag()));

    std::cout << "omega1 = " << pair.omega1 << '\n'
              << "omega2 = " << pair.omega2 << '\n'
              << "m      = " << m << '\n'
              << "residual " << pair.residual << ", iterations "
              << pair.iterations << '\n';

    Run run(common.out);
    run.emit("subordinate.json",
             json{{"z", {re, im}},
                  {"omega1", {pair.omega1.real(), pair.omega1.imag()}},
                  {"omega2", {pair.omega2.real(), pair.omega2.imag()}},
                  {"m", {m.real(), m.imag()}},
                  {"residual", pair.residual},
                  {"iterations", pair.iterations}}
                 .dump(2) +
                 "\n");
    run.manifest("subordinate", json{{"mu1", mu1_path},
                                     {"mu2", mu2_path},
                                     {"z", {re, im}},
                                     {"tol", common.tol}});
    return 0;
}

int cmd_bulk_scan(const std::string& mu1_path, const std::string& mu2_path,
                  double lo, double hi, std::size_t points, double eta,
                  double density_floor, double im_floor,
                  const CommonFlags& common) {
    const auto mu1 = read_measure_file(mu1_path);
    const auto mu2 = read_measure_file(mu2_path);

    SolveOptions opts;
    opts.tol = common.tol;
    const auto scan = regular_bulk_scan(mu1, mu2, lo, hi, points, eta,
                                        density_floor, im_floor, opts);

    std::size_t failures = 0;
    for (const auto& row : scan.rows)
        if (!row.converged) ++failures;

    std::ostringstream csv;
    write_bulk_csv(csv, scan);

    Run run(common.out);
    run.emit("bulk.csv", csv.str());
    run.manifest("bulk-scan", json{{"mu1", mu1_path},
                                   {"mu2", mu2_path},
                                   {"interval", {lo, hi}},
                                   {"points", points},
                                   {"eta", eta},
                                   {"density_floor", density_floor},
                                   {"im_floor", im_floor},
                                   {"tol", common.tol},
                                   {"failed_points", failures}});

    for (const auto& [a, b] : scan.intervals)
        std::cout << "bulk interval [" << a << ", " << b << "]\n";
    if (scan.intervals.empty()) std::cout << "no bulk intervals found\n";

    if (failures * 10 > scan.rows.size()) {
        std::cerr << "error: solver failed at " << failures << " of "
                  << scan.rows.size() << " grid points\n";
        return 2;
    }
    return 0;
}

int cmd_endpoints(double xi, double zeta, double theta,
                  const CommonFlags& common) {
    const auto ends = two_point_endpoints(xi, zeta, theta);
    std::cout << ends[0] << ' ' << ends[1] << ' ' << ends[2] << ' '
              << ends[3] << '\n';

    Run run(common.out);
    run.emit("endpoints.json",
             json{{"xi", xi},
                  {"zeta", zeta},
                  {"theta", theta},
                  {"endpoints", {ends[0], ends[1], ends[2], ends[3]}}}
                 .dump(2) +
                 "\n");
    run.manifest("endpoints",
                 json{{"xi", xi}, {"zeta", zeta}, {"theta", theta}});
    return 0;
}

int cmd_sample_spectrum(const std::string& config_path, std::size_t bins,
                        std::optional<std::uint64_t> seed_override,
                        const CommonFlags& common) {
    auto loaded = load_ensemble_spec(config_path);
    if (seed_override) loaded.seed = *seed_override;

    const auto sample = build_ensemble(loaded.config, loaded.seed);
    const auto& es = sample.eigensystem();

    std::ostringstream csv;
    csv << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < sample.n; ++i)
        csv << i << ',' << csv_double(es.evals(i)) << '\n';

    // Predicted density of the free convolution of the empirical
    // diagonal measures, swept across the observed spectrum.
    const double lo = es.evals.minCoeff(), hi = es.evals.maxCoeff();
    const double pad = 0.05 * (hi - lo + 1e-12);
    SvgSeries curve{"free convolution", "#d62728", {}};
    SolveOptions opts;
    opts.tol = common.tol;
    for (std::size_t i = 0; i < 241; ++i) {
        const double e =
            (lo - pad) + (hi - lo + 2 * pad) * double(i) / 240.0;
        const auto pair = chained_solve(sample.mu_a, sample.mu_b,
                                        HalfPlanePoint(e, 1e-3), opts);
        if (!pair.converged) continue;
        const complex_t m = stieltjes(
            sample.mu_a,
            HalfPlanePoint(pair.omega2.real(), pair.omega2.imag()));
        curve.points.emplace_back(e,
                                  m.imag() / 3.14159265358979323846);
    }

    std::ostringstream svg;
    svg_density_overlay(
        svg,
        std::vector<double>(es.evals.begin(), es.evals.end()), bins,
        curve, "sample spectrum vs free convolution");

    Run run(common.out);
    run.emit("eigenvalues.csv", csv.str());
    run.emit("spectrum.svg", svg.str());
    json cfg = config_to_json(loaded.config, loaded.seed);
    cfg["bins"] = bins;
    run.manifest("sample-spectrum", cfg);

    std::cout << "spectrum of one N = " << sample.n << " sample in ["
              << lo << ", " << hi << "]\n";
    return 0;
}

int cmd_verify(const std::string& config_path,
               std::optional<double> grid_lo, std::optional<double> grid_hi,
               std::size_t n_e, std::size_t n_eta, double gamma,
               std::size_t n_samples,
               std::optional<std::uint64_t> seed_override,
               double max_failed_frac, const CommonFlags& common) {
    auto loaded = load_ensemble_spec(config_path);
    if (seed_override) loaded.seed = *seed_override;
    const auto& cfg = loaded.config;

    // Default energy window: the Minkowski interval of the two diagonal
    // ranges, shrunk 10% per side to stay in the bulk.
    const auto [a_lo, a_hi] =
        std::minmax_element(cfg.a.begin(), cfg.a.end());
    const auto [b_lo, b_hi] =
        std::minmax_element(cfg.b.begin(), cfg.b.end());
    double lo = *a_lo + *b_lo, hi = *a_hi + *b_hi;
    const double w = hi - lo;
    if (!grid_lo) grid_lo = lo + 0.1 * w;
    if (!grid_hi) grid_hi = hi - 0.1 * w;

    const auto grid =
        make_grid(*grid_lo, *grid_hi, cfg.n, gamma, n_e, n_eta);

    SolveOptions solver;
    solver.tol = common.tol;
    const auto rep =
        verify_local_law(cfg, grid, n_samples, loaded.seed, solver);

    std::size_t failed_points = 0;
    for (const auto& pred : rep.predictions)
        if (!pred.converged) ++failed_points;

    std::ostringstream report_csv, median_csv;
    write_report_csv(report_csv, rep);
    write_median_csv(median_csv, rep);

    // Median error channels against n * eta, pooled over energies.
    SvgSeries diag{"median err_diag", "#1f77b4", {}};
    SvgSeries trace{"median err_trace", "#d62728", {}};
    SvgSeries offd{"median err_offdiag", "#2ca02c", {}};
    for (const auto& med : rep.medians) {
        if (med.n_ok == 0) continue;
        const double x = double(cfg.n) * med.eta;
        diag.points.emplace_back(x, med.med_diag);
        trace.points.emplace_back(x, med.med_trace);
        offd.points.emplace_back(x, med.med_offdiag);
    }
    std::ostringstream svg;
    svg_loglog(svg, {diag, trace, offd},
               "local law error channels vs N eta", "N eta",
               "median error");

    const json summary{
        {"N", cfg.n},
        {"n_samples", n_samples},
        {"seed", loaded.seed},
        {"grid",
         {{"lo", *grid_lo},
          {"hi", *grid_hi},
          {"n_E", n_e},
          {"n_eta", n_eta},
          {"gamma", gamma},
          {"eta_min", grid.etas.back()}}},
        {"fitted_slope_diag", fit_to_json(rep, ErrorKind::diag)},
        {"fitted_slope_trace", fit_to_json(rep, ErrorKind::trace)},
        {"fitted_slope_offdiag", fit_to_json(rep, ErrorKind::offdiag)},
        {"fitted_slope_omegaB", fit_to_json(rep, ErrorKind::omegab)},
        {"thresholds",
         {{"slope_min", -0.65}, {"slope_max", -0.35}, {"r2_min", 0.9}}},
        {"solver_failed_points", failed_points},
        {"n_grid_points", rep.predictions.size()}};

    Run run(common.out);
    run.emit("report.csv", report_csv.str());
    run.emit("medians.csv", median_csv.str());
    run.emit("summary.json", summary.dump(2) + "\n");
    run.emit("errors.svg", svg.str());

    json manifest_cfg = config_to_json(cfg, loaded.seed);
    manifest_cfg["grid"] = summary.at("grid");
    manifest_cfg["n_samples"] = n_samples;
    manifest_cfg["tol"] = common.tol;
    manifest_cfg["max_failed_frac"] = max_failed_frac;
    manifest_cfg["workers"] = common.workers;
    run.manifest("verify", manifest_cfg);

    std::cout << summary.dump(2) << '\n';

    if (double(failed_points) >
        max_failed_frac * double(rep.predictions.size())) {
        std::cerr << "error: solver failed at " << failed_points << " of "
                  << rep.predictions.size() << " grid points\n";
        return 2;
    }
    return 0;
}

int cmd_deloc(const std::string& config_path, double lo, double hi,
              std::size_t n_samples,
              std::optional<std::uint64_t> seed_override,
              const CommonFlags& common) {
    auto loaded = load_ensemble_spec(config_path);
    if (seed_override) loaded.seed = *seed_override;

    const auto rep = delocalization_report(loaded.config, lo, hi,
                                           n_samples, loaded.seed);

    std::ostringstream csv;
    csv << "index,score\n";
    for (std::size_t i = 0; i < rep.scores.size(); ++i)
        csv << i << ',' << csv_double(rep.scores[i]) << '\n';

    const double log_n = std::log(double(loaded.config.n));
    const double bound = 5.0 * log_n * log_n;
    const json summary{{"window", {lo, hi}},
                       {"count", rep.scores.size()},
                       {"max_score", rep.max_score},
                       {"mean_score", rep.mean_score},
                       {"bound_5log2", bound},
                       {"within_bound", rep.max_score <= bound}};

    Run run(common.out);
    run.emit("scores.csv", csv.str());
    run.emit("deloc.json", summary.dump(2) + "\n");
    json cfg = config_to_json(loaded.config, loaded.seed);
    cfg["window"] = {lo, hi};
    cfg["n_samples"] = n_samples;
    run.manifest("deloc", cfg);

    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_haar_test(Eigen::Index n, const std::string& field_name_str,
                  std::size_t n_samples, const CommonFlags& common) {
    if (n < 2) throw DimensionError("n must be >= 2");
    if (n_samples < 2) throw DomainError("need at least two samples");
    const Field field = parse_field(field_name_str);

    Rng rng(common.seed);
    double max_defect = 0.0, max_roundtrip = 0.0;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) {
        const HaarMatrix u = sample_haar(n, field, rng, common.seed);
        const double defect =
            (u.m.adjoint() * u.m -
             Eigen::MatrixXcd::Identity(n, n))
                .cwiseAbs()
                .maxCoeff();
        max_defect = std::max(max_defect, defect);

        const auto pd = partial_decompose(u, 0);
        const Eigen::MatrixXcd recon =
            -pd.phase * (pd.rest - pd.r * (pd.r.adjoint() * pd.rest));
        max_roundtrip = std::max(
            max_roundtrip, (recon - u.m).cwiseAbs().maxCoeff());

        const double x = double(n) * std::norm(u.m(0, 0));
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / double(n_samples);
    const double var =
        (sum_sq - sum * sum / double(n_samples)) / double(n_samples - 1);
    const double var_expected =
        field == Field::unitary
            ? double(n - 1) / double(n + 1)
            : 2.0 * double(n - 1) / double(n + 2);

    const json summary{{"n", n},
                       {"field", field_name_str},
                       {"samples", n_samples},
                       {"max_unitarity_defect", max_defect},
                       {"max_decomposition_roundtrip", max_roundtrip},
                       {"entry_mean", mean},
                       {"entry_variance", var},
                       {"entry_variance_expected", var_expected}};

    Run run(common.out);
    run.emit("haar.json", summary.dump(2) + "\n");
    run.manifest("haar-test", json{{"n", n},
                                   {"field", field_name_str},
                                   {"samples", n_samples},
                                   {"seed", common.seed}});
    std::cout << summary.dump(2) << '\n';

    if (max_defect > 1e-10 || max_roundtrip > 1e-10) {
        std::cerr << "error: sampled matrices fail unitarity or "
                     "decomposition round trip\n";
        return 2;
    }
    return 0;
}

int cmd_levy_check(const std::string& mu_a_path, const std::string& mu_b_path,
                   const std::string& mu_alpha_path,
                   const std::string& mu_beta_path, double lo, double hi,
                   Eigen::Index n, std::size_t n_e, std::size_t n_eta,
                   double gamma, const CommonFlags& common) {
    const auto mu_a = read_measure_file(mu_a_path);
    const auto mu_b = read_measure_file(mu_b_path);
    const auto mu_alpha = read_measure_file(mu_alpha_path);
    const auto mu_beta = read_measure_file(mu_beta_path);

    const auto grid = make_grid(lo, hi, n, gamma, n_e, n_eta);
    const auto ctl =
        levy_control_check(mu_a, mu_b, mu_alpha, mu_beta, grid);

    const json summary{{"lhs", ctl.lhs},
                       {"levy_sum", ctl.levy_sum},
                       {"bound_ratio", ctl.bound_ratio}};

    Run run(common.out);
    run.emit("levy.json", summary.dump(2) + "\n");
    run.manifest("levy-check", json{{"muA", mu_a_path},
                                    {"muB", mu_b_path},
                                    {"muAlpha", mu_alpha_path},
                                    {"muBeta", mu_beta_path},
                                    {"interval", {lo, hi}},
                                    {"N", n},
                                    {"n_E", n_e},
                                    {"n_eta", n_eta},
                                    {"gamma", gamma}});
    std::cout << summary.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Free additive convolution via subordination, with Monte Carlo "
        "verification on H = A + U B U* ensembles"};
    app.require_subcommand(1);
    app.fallthrough();  // accept the shared flags after the subcommand

    CommonFlags common;
    app.add_option("--out", common.out,
                   "output directory (default: $BOXPLUS_OUT or '.')");
    app.add_option("--seed", common.seed,
                   "base seed (default " + std::to_string(kDefaultSeed) +
                       ")");
    app.add_option("--tol", common.tol,
                   "subordination solver tolerance (default 1e-12)");
    app.add_option(
        "--workers", common.workers,
        "worker cap handed to the linear algebra backend (default: "
        "logical processors)");

    std::string mu1, mu2, mu3, mu4, config_path;
    std::string field_str = "unitary";
    double lo = 0.0, hi = 0.0, eta = 1e-6, z_re = 0.0, z_im = 1.0;
    double xi = 0.0, zeta = 0.0, theta = 1.0;
    double gamma = 0.2, density_floor = 1e-3, im_floor = 1e-3;
    double max_failed_frac = 0.1;
    std::size_t points = 201, bins = 60, n_e = 9, n_eta = 12,
                n_samples = 20;
    Eigen::Index dim = 100;
    std::optional<double> grid_lo, grid_hi;
    std::optional<std::uint64_t> seed_override;

    auto* convolve = app.add_subcommand(
        "convolve", "density of the free additive convolution on a grid");
    convolve->add_option("--mu1", mu1)->required();
    convolve->add_option("--mu2", mu2)->required();
    convolve->add_option("--interval", [&](CLI::results_t r) {
        lo = std::stod(r.at(0)), hi = std::stod(r.at(1));
        return true;
    }, "energy window, two values")->expected(2)->required();
    convolve->add_option("--points", points);
    convolve->add_option("--eta", eta, "probe height (default 1e-6)");

    auto* subordinate = app.add_subcommand(
        "subordinate", "solve the subordination system at one point");
    subordinate->add_option("--mu1", mu1)->required();
    subordinate->add_option("--mu2", mu2)->required();
    subordinate->add_option("--z", [&](CLI::results_t r) {
        z_re = std::stod(r.at(0)), z_im = std::stod(r.at(1));
        return true;
    }, "spectral parameter, real and imaginary part")->expected(2)->required();

    auto* bulk = app.add_subcommand(
        "bulk-scan", "locate regular bulk intervals of the convolution");
    bulk->add_option("--mu1", mu1)->required();
    bulk->add_option("--mu2", mu2)->required();
    bulk->add_option("--interval", [&](CLI::results_t r) {
        lo = std::stod(r.at(0)), hi = std::stod(r.at(1));
        return true;
    }, "energy window, two values")->expected(2)->required();
    bulk->add_option("--points", points);
    bulk->add_option("--eta", eta);
    bulk->add_option("--density-floor", density_floor);
    bulk->add_option("--im-floor", im_floor);

    auto* endpoints = app.add_subcommand(
        "endpoints", "bulk endpoints of a two-point pair (xi, zeta, theta)");
    endpoints->add_option("--xi", xi)->required();
    endpoints->add_option("--zeta", zeta)->required();
    endpoints->add_option("--theta", theta)->required();

    auto* spectrum = app.add_subcommand(
        "sample-spectrum",
        "draw one sample and plot its spectrum against the prediction");
    spectrum->add_option("--config", config_path)->required();
    spectrum->add_option("--bins", bins);
    spectrum->add_option("--sample-seed", [&](CLI::results_t r) {
        seed_override = std::stoull(r.at(0));
        return true;
    }, "override the seed from the config file");

    auto* verify = app.add_subcommand(
        "verify", "Monte Carlo local-law error channels and exponent fits");
    verify->add_option("--config", config_path)->required();
    verify->add_option("--grid-lo", [&](CLI::results_t r) {
        grid_lo = std::stod(r.at(0));
        return true;
    }, "energy window start (default: shrunk Minkowski interval)");
    verify->add_option("--grid-hi", [&](CLI::results_t r) {
        grid_hi = std::stod(r.at(0));
        return true;
    }, "energy window end");
    verify->add_option("--ne", n_e, "energy points (default 9)");
    verify->add_option("--neta", n_eta, "eta points (default 12)");
    verify->add_option("--gamma", gamma,
                       "eta floor exponent in (0,1) (default 0.2)");
    verify->add_option("--samples", n_samples, "samples (default 20)");
    verify->add_option("--run-seed", [&](CLI::results_t r) {
        seed_override = std::stoull(r.at(0));
        return true;
    }, "override the seed from the config file");
    verify->add_option("--max-failed-frac", max_failed_frac,
                       "tolerated fraction of failed grid points");

    auto* deloc = app.add_subcommand(
        "deloc", "eigenvector delocalization scores in an energy window");
    deloc->add_option("--config", config_path)->required();
    deloc->add_option("--interval", [&](CLI::results_t r) {
        lo = std::stod(r.at(0)), hi = std::stod(r.at(1));
        return true;
    }, "energy window, two values")->expected(2)->required();
    deloc->add_option("--samples", n_samples);
    deloc->add_option("--run-seed", [&](CLI::results_t r) {
        seed_override = std::stoull(r.at(0));
        return true;
    }, "override the seed from the config file");

    auto* haar = app.add_subcommand(
        "haar-test", "sampler self-test: unitarity, moments, round trip");
    haar->add_option("--n", dim, "matrix dimension (default 100)");
    haar->add_option("--field", field_str, "unitary | orthogonal");
    haar->add_option("--samples", n_samples);

    auto* levy = app.add_subcommand(
        "levy-check",
        "continuity of the solution in the measure inputs");
    levy->add_option("--muA", mu1)->required();
    levy->add_option("--muB", mu2)->required();
    levy->add_option("--muAlpha", mu3)->required();
    levy->add_option("--muBeta", mu4)->required();
    levy->add_option("--interval", [&](CLI::results_t r) {
        lo = std::stod(r.at(0)), hi = std::stod(r.at(1));
        return true;
    }, "energy window, two values")->expected(2)->required();
    levy->add_option("--n", dim, "dimension setting the eta floor");
    levy->add_option("--ne", n_e);
    levy->add_option("--neta", n_eta);
    levy->add_option("--gamma", gamma);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        Eigen::setNbThreads(int(common.workers));
        if (convolve->parsed())
            return cmd_convolve(mu1, mu2, lo, hi, points, eta, common);
        if (subordinate->parsed())
            return cmd_subordinate(mu1, mu2, z_re, z_im, common);
        if (bulk->parsed())
            return cmd_bulk_scan(mu1, mu2, lo, hi, points, eta,
                                 density_floor, im_floor, common);
        if (endpoints->parsed())
            return cmd_endpoints(xi, zeta, theta, common);
        if (spectrum->parsed())
            return cmd_sample_spectrum(config_path, bins, seed_override,
                                       common);
        if (verify->parsed())
            return cmd_verify(config_path, grid_lo, grid_hi, n_e, n_eta,
                              gamma, n_samples, seed_override,
                              max_failed_frac, common);
        if (deloc->parsed())
            return cmd_deloc(config_path, lo, hi, n_samples, seed_override,
                             common);
        if (haar->parsed())
            return cmd_haar_test(dim, field_str, n_samples, common);
        if (levy->parsed())
            return cmd_levy_check(mu1, mu2, mu3, mu4, lo, hi, dim, n_e,
                                  n_eta, gamma, common);
        std::cerr << "error: no subcommand dispatched\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        // Numerical failures: NotConverged, SingularJacobian,
        // EmptySelection, InsufficientData, and friends.
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
