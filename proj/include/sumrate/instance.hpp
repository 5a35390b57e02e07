#pragma once

#include <optional>
#include <string>

#include "sumrate/analysis.hpp"
#include "sumrate/cdma.hpp"
#include "sumrate/fdma.hpp"
#include "sumrate/sequences.hpp"

namespace sumrate {

/// Structural problem with an instance document (malformed JSON, wrong
/// or missing fields, non-finite numbers). Distinct from semantic
/// invariant violations, which surface as std::invalid_argument.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Mode { Fdma, Tdma, Cdma, CdmaAsync };

std::string to_string(Mode mode);
std::string to_string(SizeClass label);

/// One self-describing instance document.
struct Instance {
    Mode mode = Mode::Fdma;
    std::vector<double> powers;
    std::vector<double> bandwidth_limits;       // fdma
    std::vector<double> duty_limits;            // tdma
    std::vector<int> code_limits;               // cdma / cdma-async
    FdmaConstants fdma_constants;               // fdma / tdma
    CdmaConstants cdma_constants;               // cdma / cdma-async
    std::optional<std::vector<int>> delays;     // cdma-async
    std::optional<SplitStrategy> strategy;
    std::optional<std::uint64_t> seed;

    std::size_t size() const { return powers.size(); }
};

Instance parse_instance(const std::string& json_text);
Instance load_instance(const std::string& path);

/// Everything the solve command reports, with per-user vectors in
/// original input order and classification in sorted order.
struct SolveReport {
    Mode mode = Mode::Fdma;
    bool complex_baseband = false;
    std::vector<int> user_order;                 // sorted position -> original index
    Classification classification;               // sorted order, active users
    std::vector<double> allocations;             // w* (fdma/cdma equivalent) or t* (tdma)
    std::vector<double> psds;                    // NaN where undefined
    double common_psd = 0.0;
    double sum_rate = 0.0;
    double mac_capacity = 0.0;
    KktCertificate kkt;
    std::vector<std::vector<double>> trace;      // per-iteration tentative allocations (sorted order)

    // cdma modes only
    std::optional<CdmaSolution> cdma;            // sorted order
    std::optional<StreamCounts> stream_counts;   // sorted order
    SplitStrategy strategy = SplitStrategy::EqualPower;

    double capacity_gap() const { return mac_capacity - sum_rate; }
};

/// Runs the solver appropriate for the instance mode. Unsorted users
/// are sorted internally; zero-power users are allowed and receive zero
/// allocations. with_trace records the iterative algorithm's snapshots.
SolveReport solve_instance(const Instance& instance, std::optional<SplitStrategy> strategy_override,
                           bool with_trace, bool complex_baseband);

std::string render_text(const SolveReport& report, const Instance& instance);
std::string render_json(const SolveReport& report);

/// CSV emission, every value at 17 significant digits.
std::string allocation_csv(const SolveReport& report, const Instance& instance);
std::string classification_csv(const SolveReport& report);
std::string trace_csv(const SolveReport& report);
std::string sequence_csv(const Eigen::MatrixXd& columns);
std::string fading_csv(int limit, const FadingSummary& summary);

std::string format_double(double value);  // shortest 17-significant-digit form

}  // namespace sumrate
