#include "sumrate/instance.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace sumrate {

using nlohmann::json;

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::Fdma: return "fdma";
        case Mode::Tdma: return "tdma";
        case Mode::Cdma: return "cdma";
        case Mode::CdmaAsync: return "cdma-async";
    }
    return "?";
}

std::string to_string(SizeClass label) {
    switch (label) {
        case SizeClass::Oversized: return "oversized";
        case SizeClass::CriticallySized: return "critically-sized";
        case SizeClass::Undersized: return "undersized";
    }
    return "?";
}

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

namespace {

std::vector<double> finite_number_array(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_array())
        throw ParseError("missing or non-array field: " + field);
    std::vector<double> values;
    for (const auto& v : j[field]) {
        if (!v.is_number()) throw ParseError("non-numeric entry in field: " + field);
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ParseError("non-finite entry in field: " + field);
        values.push_back(d);
    }
    return values;
}

std::vector<int> integer_array(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_array())
        throw ParseError("missing or non-array field: " + field);
    std::vector<int> values;
    for (const auto& v : j[field]) {
        if (!v.is_number_integer()) throw ParseError("non-integer entry in field: " + field);
        values.push_back(v.get<int>());
    }
    return values;
}

double finite_number(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number())
        throw ParseError("missing or non-numeric field: " + field);
    const double d = j[field].get<double>();
    if (!std::isfinite(d)) throw ParseError("non-finite field: " + field);
    return d;
}

}  // namespace

Instance parse_instance(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("instance document must be a JSON object");

    Instance instance;
    const std::string mode = doc.value("mode", "");
    if (mode == "fdma")
        instance.mode = Mode::Fdma;
    else if (mode == "tdma")
        instance.mode = Mode::Tdma;
    else if (mode == "cdma")
        instance.mode = Mode::Cdma;
    else if (mode == "cdma-async")
        instance.mode = Mode::CdmaAsync;
    else
        throw ParseError("mode must be one of fdma, tdma, cdma, cdma-async");

    instance.powers = finite_number_array(doc, "powers");

    if (!doc.contains("limits") || !doc["limits"].is_object())
        throw ParseError("missing limits object");
    const json& limits = doc["limits"];
    if (limits.size() != 1) throw ParseError("limits must contain exactly one kind");
    if (!doc.contains("constants") || !doc["constants"].is_object())
        throw ParseError("missing constants object");
    const json& constants = doc["constants"];

    switch (instance.mode) {
        case Mode::Fdma:
            if (!limits.contains("bandwidth"))
                throw ParseError("fdma instances take limits.bandwidth");
            instance.bandwidth_limits = finite_number_array(limits, "bandwidth");
            instance.fdma_constants = {finite_number(constants, "total_bandwidth"),
                                       finite_number(constants, "noise_psd")};
            break;
        case Mode::Tdma:
            if (!limits.contains("duty_cycle"))
                throw ParseError("tdma instances take limits.duty_cycle");
            instance.duty_limits = finite_number_array(limits, "duty_cycle");
            instance.fdma_constants = {finite_number(constants, "total_bandwidth"),
                                       finite_number(constants, "noise_psd")};
            break;
        case Mode::Cdma:
        case Mode::CdmaAsync:
            if (!limits.contains("multicode"))
                throw ParseError("cdma instances take limits.multicode");
            instance.code_limits = integer_array(limits, "multicode");
            if (!constants.contains("processing_gain") ||
                !constants["processing_gain"].is_number_integer())
                throw ParseError("missing or non-integer constants.processing_gain");
            instance.cdma_constants = {constants["processing_gain"].get<int>(),
                                       finite_number(constants, "noise_variance")};
            break;
    }

    if (instance.mode == Mode::CdmaAsync) {
        if (!doc.contains("delays")) throw ParseError("cdma-async instances require delays");
        instance.delays = integer_array(doc, "delays");
    } else if (doc.contains("delays")) {
        throw ParseError("delays are only valid for cdma-async instances");
    }

    if (doc.contains("strategy")) {
        const std::string s = doc["strategy"].get<std::string>();
        if (s == "equal")
            instance.strategy = SplitStrategy::EqualPower;
        else if (s == "mincount")
            instance.strategy = SplitStrategy::MinCountMaxOrthogonal;
        else
            throw ParseError("strategy must be equal or mincount");
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer()) throw ParseError("seed must be an integer");
        instance.seed = doc["seed"].get<std::uint64_t>();
    }
    return instance;
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instance file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_instance(buffer.str());
}

namespace {

struct SortedView {
    FdmaProfile sorted;     // active users only, sorted
    UserOrder order;        // over all users
    int active = 0;
};

SortedView sort_and_strip(const FdmaProfile& profile) {
    SortedView view;
    view.order = order_users(profile);
    FdmaProfile sorted{permute(profile.powers, view.order.permutation),
                       permute(profile.limits, view.order.permutation)};
    view.active = static_cast<int>(sorted.size());
    while (view.active > 0 && sorted.powers[view.active - 1] == 0.0) --view.active;
    view.sorted.powers.assign(sorted.powers.begin(), sorted.powers.begin() + view.active);
    view.sorted.limits.assign(sorted.limits.begin(), sorted.limits.begin() + view.active);
    return view;
}

std::vector<double> expand_and_unpermute(const std::vector<double>& active_values,
                                         const SortedView& view, double fill) {
    std::vector<double> sorted(view.order.permutation.size(), fill);
    std::copy(active_values.begin(), active_values.end(), sorted.begin());
    return unpermute(sorted, view.order.permutation);
}

}  // namespace

SolveReport solve_instance(const Instance& instance, std::optional<SplitStrategy> strategy_override,
                           bool with_trace, bool complex_baseband) {
    SolveReport report;
    report.mode = instance.mode;
    report.complex_baseband = complex_baseband;
    report.strategy = strategy_override.value_or(
        instance.strategy.value_or(SplitStrategy::EqualPower));
    const double rate_scale = complex_baseband ? 2.0 : 1.0;

    if (instance.mode == Mode::Fdma || instance.mode == Mode::Tdma) {
        FdmaProfile profile{instance.powers, instance.mode == Mode::Fdma ? instance.bandwidth_limits
                                                                         : instance.duty_limits};
        const FdmaConstants constants = instance.fdma_constants;
        if (instance.mode == Mode::Tdma) {
            validate(constants);
            for (double& limit : profile.limits) limit *= constants.total_bandwidth;
        }
        validate(profile);

        const SortedView view = sort_and_strip(profile);
        Allocation allocation = allocate_iterative(view.sorted, constants, with_trace);
        report.kkt = verify_kkt(view.sorted, constants, allocation.bandwidths);
        report.classification = allocation.classification;
        report.user_order = view.order.permutation;
        report.common_psd = allocation.common_psd;
        report.trace = std::move(allocation.trace);
        report.sum_rate = rate_scale * allocation.sum_rate;
        report.mac_capacity = rate_scale * mac_sum_capacity(profile, constants);

        std::vector<double> bandwidths = expand_and_unpermute(allocation.bandwidths, view, 0.0);
        report.psds.resize(bandwidths.size());
        for (std::size_t k = 0; k < bandwidths.size(); ++k)
            report.psds[k] = bandwidths[k] > 0.0
                                 ? instance.powers[k] / bandwidths[k]
                                 : std::numeric_limits<double>::quiet_NaN();
        if (instance.mode == Mode::Tdma) {
            for (double& w : bandwidths) w /= constants.total_bandwidth;
            for (std::size_t k = 0; k < bandwidths.size(); ++k)
                if (bandwidths[k] > 0.0)
                    report.psds[k] = instance.powers[k] /
                                     (bandwidths[k] * constants.total_bandwidth);
        }
        report.allocations = std::move(bandwidths);
        return report;
    }

    // cdma / cdma-async
    if (instance.code_limits.size() != instance.powers.size())
        throw std::invalid_argument("powers and limits must have equal length");
    FdmaProfile as_double{instance.powers, {}};
    as_double.limits.reserve(instance.code_limits.size());
    for (int n : instance.code_limits) {
        if (n < 1) throw std::invalid_argument("multi-code limits must be at least 1");
        as_double.limits.push_back(static_cast<double>(n));
    }
    validate(as_double);
    const UserOrder order = order_users(as_double);

    CdmaInstance sorted;
    sorted.constants = instance.cdma_constants;
    for (int idx : order.permutation) {
        if (instance.powers[idx] == 0.0) continue;  // zero-power users sort last
        sorted.powers.push_back(instance.powers[idx]);
        sorted.limits.push_back(instance.code_limits[idx]);
    }
    if (instance.mode == Mode::CdmaAsync) {
        if (!instance.delays) throw std::invalid_argument("asynchronous instances require delays");
        std::vector<int> delays;
        for (int idx : order.permutation)
            if (instance.powers[idx] > 0.0) delays.push_back((*instance.delays)[idx]);
        sorted.delays = std::move(delays);
    }
    validate(sorted);

    CdmaSolution solution = solve_cdma(sorted, report.strategy);
    report.user_order = order.permutation;
    report.classification = solution.classification;
    report.stream_counts = stream_count_extremes(sorted);
    report.sum_rate = rate_scale * solution.sum_rate;
    report.mac_capacity = rate_scale * cdma_mac_capacity(sorted);

    const FdmaProfile equivalent = equivalent_fdma_profile(sorted);
    const FdmaConstants eq_constants = equivalent_fdma_constants(sorted.constants);
    report.kkt = verify_kkt(equivalent, eq_constants, solution.equivalent_bandwidths);
    report.common_psd = report.kkt.common_psd;
    if (with_trace)
        report.trace = allocate_iterative(equivalent, eq_constants, true).trace;

    SortedView view;  // expansion helper over all users
    view.order = order;
    view.active = static_cast<int>(sorted.size());
    std::vector<double> bandwidths =
        expand_and_unpermute(solution.equivalent_bandwidths, view, 0.0);
    report.psds.resize(bandwidths.size());
    for (std::size_t k = 0; k < bandwidths.size(); ++k)
        report.psds[k] = bandwidths[k] > 0.0 ? instance.powers[k] / bandwidths[k]
                                             : std::numeric_limits<double>::quiet_NaN();
    report.allocations = std::move(bandwidths);
    report.cdma = std::move(solution);
    return report;
}

namespace {

json vector_to_json(const std::vector<double>& values) {
    json arr = json::array();
    for (double v : values) {
        if (std::isnan(v))
            arr.push_back(nullptr);
        else
            arr.push_back(v);
    }
    return arr;
}

json classification_to_json(const Classification& c) {
    json labels = json::array();
    for (SizeClass label : c.labels) labels.push_back(to_string(label));
    return json{{"labels", labels},
                {"oversized_count", c.oversized_count},
                {"non_undersized_count", c.non_undersized_count},
                {"test_values", c.test_values}};
}

}  // namespace

std::string render_json(const SolveReport& report) {
    json doc;
    doc["mode"] = to_string(report.mode);
    doc["complex_baseband"] = report.complex_baseband;
    doc["user_order"] = report.user_order;
    doc["classification"] = classification_to_json(report.classification);
    doc["allocation"] = json{{report.mode == Mode::Tdma ? "duty_cycles" : "bandwidths",
                              vector_to_json(report.allocations)},
                             {"psds", vector_to_json(report.psds)},
                             {"common_psd", report.common_psd}};
    doc["sum_rate"] = report.sum_rate;
    doc["mac_capacity"] = report.mac_capacity;
    doc["capacity_gap"] = report.capacity_gap();
    doc["kkt"] = json{{"valid", report.kkt.valid},
                      {"tolerance", report.kkt.tolerance},
                      {"mu_upper", report.kkt.mu_upper},
                      {"mu_total", report.kkt.mu_total},
                      {"common_psd", report.kkt.common_psd},
                      {"residuals",
                       json{{"stationarity", report.kkt.residuals.stationarity},
                            {"primal_upper", report.kkt.residuals.primal_upper},
                            {"primal_lower", report.kkt.residuals.primal_lower},
                            {"primal_total", report.kkt.residuals.primal_total},
                            {"dual_upper", report.kkt.residuals.dual_upper},
                            {"dual_lower", report.kkt.residuals.dual_lower},
                            {"dual_total", report.kkt.residuals.dual_total},
                            {"slack_upper", report.kkt.residuals.slack_upper},
                            {"slack_lower", report.kkt.residuals.slack_lower},
                            {"slack_total", report.kkt.residuals.slack_total}}}};
    if (report.cdma) {
        const auto& s = *report.cdma;
        doc["cdma"] = json{{"strategy", report.strategy == SplitStrategy::EqualPower ? "equal"
                                                                                     : "mincount"},
                           {"equivalent_bandwidths", s.equivalent_bandwidths},
                           {"equivalent_duty_cycles", s.equivalent_duty_cycles},
                           {"stream_bandwidths", s.split.bandwidths},
                           {"stream_powers", s.split.powers},
                           {"active_streams", s.split.active_counts},
                           {"achieves_mac", s.achieves_mac},
                           {"max_orthogonal", report.stream_counts->max_orthogonal},
                           {"min_active", report.stream_counts->min_active}};
    }
    if (!report.trace.empty()) doc["trace"] = report.trace;
    return doc.dump(2);
}

std::string render_text(const SolveReport& report, const Instance& instance) {
    std::ostringstream out;
    const char* unit = report.mode == Mode::Fdma || report.mode == Mode::Tdma
                           ? (report.complex_baseband ? "bits/s (complex)" : "bits/s")
                           : (report.complex_baseband ? "bps/Hz" : "bits/chip");
    out << "mode: " << to_string(report.mode) << "\n";
    out << "users (sorted by minimal PSD):\n";
    out << "  pos  user      power      limit       test  class             allocation        psd\n";
    const auto& labels = report.classification.labels;
    for (std::size_t pos = 0; pos < report.user_order.size(); ++pos) {
        const int original = report.user_order[pos];
        const double limit = report.mode == Mode::Fdma   ? instance.bandwidth_limits[original]
                             : report.mode == Mode::Tdma ? instance.duty_limits[original]
                                                         : instance.code_limits[original];
        char line[160];
        if (pos < labels.size()) {
            std::snprintf(line, sizeof line, "  %3zu  %4d %10.5g %10.5g %10.5g  %-16s %11.6g %10.5g\n",
                          pos, original, instance.powers[original], limit,
                          report.classification.test_values[pos],
                          to_string(labels[pos]).c_str(), report.allocations[original],
                          report.psds[original]);
        } else {
            std::snprintf(line, sizeof line, "  %3zu  %4d %10.5g %10.5g %10s  %-16s %11.6g %10s\n",
                          pos, original, instance.powers[original], limit, "-", "inactive",
                          report.allocations[original], "-");
        }
        out << line;
    }
    out << "oversized count K1: " << report.classification.oversized_count
        << ", non-undersized count K2: " << report.classification.non_undersized_count << "\n";
    out << "common PSD of non-oversized users: " << format_double(report.common_psd) << "\n";
    out << "sum rate: " << format_double(report.sum_rate) << " " << unit << "\n";
    out << "MAC sum capacity: " << format_double(report.mac_capacity) << " " << unit << "\n";
    out << "capacity gap: " << format_double(report.capacity_gap()) << " " << unit << "\n";
    out << "KKT certificate: " << (report.kkt.valid ? "valid" : "INVALID")
        << " (max residual " << format_double(report.kkt.residuals.max()) << ", tolerance "
        << format_double(report.kkt.tolerance) << ")\n";
    if (report.cdma) {
        const auto& s = *report.cdma;
        out << "achieves MAC sum capacity: " << (s.achieves_mac ? "yes" : "no") << "\n";
        out << "streams (sorted order): active n*="
            << " [";
        for (std::size_t k = 0; k < s.split.active_counts.size(); ++k)
            out << (k ? "," : "") << s.split.active_counts[k];
        out << "], max orthogonal [";
        for (std::size_t k = 0; k < report.stream_counts->max_orthogonal.size(); ++k)
            out << (k ? "," : "") << report.stream_counts->max_orthogonal[k];
        out << "], min active [";
        for (std::size_t k = 0; k < report.stream_counts->min_active.size(); ++k)
            out << (k ? "," : "") << report.stream_counts->min_active[k];
        out << "]\n";
    }
    if (!report.trace.empty()) {
        out << "iterative allocation trace (sorted order, active users):\n";
        for (std::size_t it = 0; it < report.trace.size(); ++it) {
            out << "  iteration " << it + 1 << ":";
            for (double w : report.trace[it]) {
                char cell[32];
                std::snprintf(cell, sizeof cell, " %.6g", w);
                out << cell;
            }
            out << "\n";
        }
    }
    return out.str();
}

std::string allocation_csv(const SolveReport& report, const Instance& instance) {
    std::ostringstream out;
    out << "user,power," << (report.mode == Mode::Tdma ? "duty_cycle" : "bandwidth") << ",psd\n";
    for (std::size_t k = 0; k < report.allocations.size(); ++k) {
        out << k << "," << format_double(instance.powers[k]) << ","
            << format_double(report.allocations[k]) << ","
            << (std::isnan(report.psds[k]) ? "" : format_double(report.psds[k])) << "\n";
    }
    return out.str();
}

std::string classification_csv(const SolveReport& report) {
    std::ostringstream out;
    out << "position,user,test_value,label\n";
    for (std::size_t pos = 0; pos < report.classification.labels.size(); ++pos) {
        out << pos << "," << report.user_order[pos] << ","
            << format_double(report.classification.test_values[pos]) << ","
            << to_string(report.classification.labels[pos]) << "\n";
    }
    return out.str();
}

std::string trace_csv(const SolveReport& report) {
    std::ostringstream out;
    out << "iteration,position,tentative_allocation\n";
    for (std::size_t it = 0; it < report.trace.size(); ++it)
        for (std::size_t pos = 0; pos < report.trace[it].size(); ++pos)
            out << it + 1 << "," << pos << "," << format_double(report.trace[it][pos]) << "\n";
    return out.str();
}

std::string sequence_csv(const Eigen::MatrixXd& columns) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
        for (Eigen::Index j = 0; j < columns.cols(); ++j)
            out << (j ? "," : "") << format_double(columns(i, j));
        out << "\n";
    }
    return out.str();
}

std::string fading_csv(int limit, const FadingSummary& summary) {
    std::ostringstream out;
    out << "limit,trial,restricted,unrestricted\n";
    for (std::size_t t = 0; t < summary.trials.size(); ++t)
        out << limit << "," << t << "," << format_double(summary.trials[t].restricted) << ","
            << format_double(summary.trials[t].unrestricted) << "\n";
    return out.str();
}

}  // namespace sumrate
