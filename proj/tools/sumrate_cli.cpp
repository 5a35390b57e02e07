// Command-line front end: solve instance files, construct signature
// matrices, and emit curve/study data as CSV.
//
// Exit codes: 0 success, 2 parse/parameter error, 3 infeasible or
// invalid instance, 4 sequence verification failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sumrate/instance.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitInvalid = 3;
constexpr int kExitGram = 4;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SUMRATE_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw sumrate::ParseError("SUMRATE_SEED must be a non-negative integer");
        }
    }
    return 0;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << contents;
}

int run_solve(const std::string& path, bool as_json, const std::string& csv_dir,
              const std::string& strategy_name, bool trace, bool complex_baseband) {
    const sumrate::Instance instance = sumrate::load_instance(path);
    std::optional<sumrate::SplitStrategy> strategy;
    if (strategy_name == "equal")
        strategy = sumrate::SplitStrategy::EqualPower;
    else if (strategy_name == "mincount")
        strategy = sumrate::SplitStrategy::MinCountMaxOrthogonal;
    else if (!strategy_name.empty())
        throw sumrate::ParseError("--strategy must be equal or mincount");

    const sumrate::SolveReport report =
        sumrate::solve_instance(instance, strategy, trace, complex_baseband);
    if (as_json)
        std::cout << sumrate::render_json(report) << "\n";
    else
        std::cout << sumrate::render_text(report, instance);

    if (!csv_dir.empty()) {
        std::filesystem::create_directories(csv_dir);
        write_file(csv_dir + "/allocation.csv", sumrate::allocation_csv(report, instance));
        write_file(csv_dir + "/classification.csv", sumrate::classification_csv(report));
        if (!report.trace.empty()) write_file(csv_dir + "/trace.csv", sumrate::trace_csv(report));
    }
    return kExitOk;
}

int run_sequences(const std::string& path, std::optional<std::uint64_t> seed,
                  const std::string& out_path) {
    const sumrate::Instance instance = sumrate::load_instance(path);
    if (instance.mode != sumrate::Mode::Cdma && instance.mode != sumrate::Mode::CdmaAsync)
        throw std::invalid_argument("sequence construction needs a cdma instance");

    const sumrate::SolveReport report =
        sumrate::solve_instance(instance, std::nullopt, false, false);
    const std::uint64_t used_seed = seed.value_or(instance.seed.value_or(default_seed()));

    // Rebuild the sorted instance the report was computed from.
    sumrate::CdmaInstance sorted;
    sorted.constants = instance.cdma_constants;
    for (int idx : report.user_order) {
        if (instance.powers[idx] == 0.0) continue;
        sorted.powers.push_back(instance.powers[idx]);
        sorted.limits.push_back(instance.code_limits[idx]);
    }

    const sumrate::VirtualUserSet vset =
        sumrate::build_virtual_users(*report.cdma, sorted.constants);
    const sumrate::SequenceMatrix matrix =
        sumrate::construct_sequences(vset, sorted.constants, used_seed);
    const sumrate::GramReport gram = sumrate::verify_gram(matrix, vset, sorted.constants);

    write_file(out_path, sumrate::sequence_csv(matrix.columns));
    std::cout << "sequence matrix: " << matrix.columns.rows() << " x " << matrix.columns.cols()
              << ", seed " << used_seed << ", written to " << out_path << "\n";
    std::cout << "gram residuals: orthogonal " << sumrate::format_double(gram.max_orthogonal_offdiag)
              << ", cross " << sumrate::format_double(gram.max_cross) << ", norms "
              << sumrate::format_double(gram.max_norm_deviation) << ", complement "
              << sumrate::format_double(gram.max_complement_deviation) << "\n";
    std::cout << "verification: " << (gram.pass ? "pass" : "FAIL") << " (max residual "
              << sumrate::format_double(gram.max_residual) << ", tolerance "
              << sumrate::format_double(sumrate::kGramTolerance) << ")\n";
    return gram.pass ? kExitOk : kExitGram;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> values;
    std::size_t begin = 0;
    while (begin <= text.size()) {
        const std::size_t end = text.find(',', begin);
        const std::string item = text.substr(begin, end == std::string::npos ? end : end - begin);
        if (!item.empty()) values.push_back(std::stoi(item));
        if (end == std::string::npos) break;
        begin = end + 1;
    }
    if (values.empty()) throw sumrate::ParseError("empty integer list");
    return values;
}

int run_curves(const std::string& kind, const std::string& users_list, int gain,
               const std::string& limits_list, int limit_max, double snr_db, double min_db,
               double max_db, double step_db, double ebn0_db, int trials,
               std::optional<std::uint64_t> seed, const std::string& out_path) {
    std::ostringstream csv;
    if (kind == "loading") {
        // Sum rate against the equal limit, one column pair per user count.
        const std::vector<int> users = parse_int_list(users_list);
        if (gain < 1 || limit_max < 1) throw sumrate::ParseError("need gain >= 1 and limit-max >= 1");
        const double snr = std::pow(10.0, snr_db / 10.0);
        csv << "limit";
        for (int k : users) csv << ",sum_rate_K" << k << ",mac_K" << k;
        csv << "\n";
        for (int limit = 1; limit <= limit_max; ++limit) {
            csv << limit;
            for (int k : users) {
                sumrate::CdmaInstance instance;
                instance.powers.assign(k, snr);
                instance.limits.assign(k, limit);
                instance.constants = {gain, 1.0};
                csv << "," << sumrate::format_double(sumrate::solve_cdma(instance).sum_rate) << ","
                    << sumrate::format_double(sumrate::cdma_mac_capacity(instance));
            }
            csv << "\n";
        }
    } else if (kind == "ebn0") {
        // Spectral efficiency against Eb/N0, one column per equal limit.
        const std::vector<int> users = parse_int_list(users_list);
        if (users.size() != 1) throw sumrate::ParseError("ebn0 curves take exactly one user count");
        const std::vector<int> limits = parse_int_list(limits_list);
        if (!(min_db < max_db) || !(step_db > 0.0))
            throw sumrate::ParseError("need min-db < max-db and step-db > 0");
        csv << "ebn0_db";
        for (int limit : limits) csv << ",efficiency_n" << limit;
        csv << "\n";
        for (double db = min_db; db <= max_db + 1e-9; db += step_db) {
            csv << sumrate::format_double(db);
            for (int limit : limits) {
                const double load = static_cast<double>(limit) * users[0] / gain;
                csv << ","
                    << sumrate::format_double(
                           sumrate::symmetric_efficiency(load, std::pow(10.0, db / 10.0)));
            }
            csv << "\n";
        }
    } else if (kind == "fading") {
        const std::vector<int> users = parse_int_list(users_list);
        if (users.size() != 1) throw sumrate::ParseError("fading studies take exactly one user count");
        const std::vector<int> limits = parse_int_list(limits_list);
        if (trials < 1) throw sumrate::ParseError("need trials >= 1");
        csv << "limit,trial,restricted,unrestricted\n";
        for (int limit : limits) {
            sumrate::FadingConfig config;
            config.users = users[0];
            config.processing_gain = gain;
            config.limit = limit;
            config.mean_ebn0_db = ebn0_db;
            config.trials = trials;
            config.seed = seed.value_or(default_seed());
            const sumrate::FadingSummary summary = sumrate::rayleigh_fading_study(config);
            const std::string block = sumrate::fading_csv(limit, summary);
            csv << block.substr(block.find('\n') + 1);  // skip the per-block header
            std::cout << "limit " << limit << ": mean restricted "
                      << sumrate::format_double(summary.mean_restricted) << ", mean unrestricted "
                      << sumrate::format_double(summary.mean_unrestricted) << " bps/Hz over "
                      << trials << " trials\n";
        }
    } else {
        throw sumrate::ParseError("curve kind must be loading, ebn0, or fading");
    }
    write_file(out_path, csv.str());
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sum-rate optimal allocation for restricted FDMA/TDMA and multi-code CDMA"};
    app.require_subcommand(1);

    std::string instance_path, csv_dir, strategy, out_path = "sequences.csv";
    bool as_json = false, trace = false, complex_baseband = false;
    std::uint64_t seed_value = 0;

    CLI::App* solve = app.add_subcommand("solve", "solve an instance file and report");
    solve->add_option("instance", instance_path, "instance JSON file")->required();
    solve->add_flag("--json", as_json, "emit a JSON report instead of text");
    solve->add_option("--csv", csv_dir, "directory for allocation/classification/trace CSV");
    solve->add_option("--strategy", strategy, "stream split strategy: equal | mincount");
    solve->add_flag("--trace", trace, "record per-iteration allocation snapshots");
    solve->add_flag("--complex", complex_baseband, "report complex-baseband (paired-dimension) rates");

    CLI::App* sequences = app.add_subcommand("sequences", "construct and verify signature sequences");
    sequences->add_option("instance", instance_path, "cdma instance JSON file")->required();
    CLI::Option* seq_seed = sequences->add_option("--seed", seed_value, "construction seed");
    sequences->add_option("--out,-o", out_path, "output CSV path");

    std::string kind, users_list = "100", limits_list = "1";
    int gain = 128, limit_max = 8, trials = 100;
    double snr_db = 10.0, min_db = 0.0, max_db = 20.0, step_db = 0.5, ebn0_db = 10.0;
    CLI::App* curves = app.add_subcommand("curves", "emit figure data grids as CSV");
    curves->add_option("kind", kind, "loading | ebn0 | fading")->required();
    curves->add_option("--users", users_list, "user count(s), comma separated");
    curves->add_option("--gain", gain, "processing gain N");
    curves->add_option("--limits", limits_list, "equal limit value(s), comma separated");
    curves->add_option("--limit-max", limit_max, "largest equal limit for loading curves");
    curves->add_option("--snr-db", snr_db, "per-user p/sigma^2 in dB (loading curves)");
    curves->add_option("--min-db", min_db, "lowest Eb/N0 in dB (ebn0 curves)");
    curves->add_option("--max-db", max_db, "highest Eb/N0 in dB (ebn0 curves)");
    curves->add_option("--step-db", step_db, "Eb/N0 grid step in dB (ebn0 curves)");
    curves->add_option("--ebn0-db", ebn0_db, "average Eb/N0 in dB (fading studies)");
    curves->add_option("--trials", trials, "Monte-Carlo trials per limit (fading studies)");
    CLI::Option* curve_seed = curves->add_option("--seed", seed_value, "study seed");
    curves->add_option("--out,-o", out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParse;
    }

    try {
        if (solve->parsed())
            return run_solve(instance_path, as_json, csv_dir, strategy, trace, complex_baseband);
        if (sequences->parsed()) {
            std::optional<std::uint64_t> seed;
            if (seq_seed->count()) seed = seed_value;
            return run_sequences(instance_path, seed, out_path);
        }
        std::optional<std::uint64_t> seed;
        if (curve_seed->count()) seed = seed_value;
        return run_curves(kind, users_list, gain, limits_list, limit_max, snr_db, min_db, max_db,
                          step_db, ebn0_db, trials, seed, out_path);
    } catch (const sumrate::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid instance: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
