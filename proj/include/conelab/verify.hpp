#pragma once
// Verification harnesses. Each suite evaluates both sides of an inequality on
// a fixed corpus at two refinement levels (N/2 and N), reports the measured
// constants with their drift, and collects exact sub-invariants as checks.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "conelab/grid.hpp"
#include "conelab/semigroup.hpp"
#include "conelab/sparse_ops.hpp"
#include "conelab/square.hpp"

namespace conelab {

struct VerifyConfig {
    DomainMode mode = DomainMode::TruncatedLine;
    double left = -4.0;
    double right = 4.0;
    std::size_t n = 2048;              // fine level; the coarse level has n / 2 cells
    std::string op = "laplacian";      // laplacian or spectral
    std::string psi = "s2exp";         // multiplier of the spectral operator
    std::vector<double> alphas = {1.0};
    std::vector<double> p_values;      // empty: each suite's own exponents
    int per_octave = 16;
    double t_min = 0.0;                // 0: length / 512
    double t_max = 0.0;                // 0: length
    std::uint64_t seed = 42;
    std::size_t functions = 20;
    double drift_tolerance = 0.15;
    double lambda = 3.0;               // g* exponent
    double delta = 0.5;                // dilation decay in the domination pipeline
    unsigned workers = 1;
};

struct SuiteCase {
    std::string label;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

struct SuiteCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

// A measured constant at both levels.
struct MeasuredConstant {
    std::string name;
    double coarse = 0.0;
    double fine = 0.0;
    double drift = 0.0;  // |fine - coarse| / coarse
};

// Survival fractions |{x in B : S f > t M f}| / |B| and the fit c1 exp(-c2 t^2).
struct DecayFit {
    std::string label;
    std::vector<double> thresholds;
    std::vector<double> fractions;
    double max_ratio = 0.0;  // sup over B of S f / M f
    std::size_t points = 0;  // thresholds with a positive fraction
    double c1 = 0.0;         // smallest c1 dominating every fraction for the fitted c2
    double c2 = 0.0;
    double r2 = 0.0;         // of the regression of log fraction on t^2
    bool below_resolution = false;  // every fraction is zero
    bool fitted = false;            // at least two positive fractions
    bool dominated = false;
    bool nonincreasing = false;

    nlohmann::json to_json() const;
    static DecayFit from_json(const nlohmann::json& j);
};

struct SuiteReport {
    std::string id;
    std::string statement;
    std::string corpus;
    std::size_t n_coarse = 0;
    std::size_t n_fine = 0;
    std::vector<SuiteCase> cases;  // fine level
    std::vector<MeasuredConstant> constants;
    std::vector<SuiteCheck> checks;
    std::vector<DecayFit> fits;
    double sup_ratio = 0.0;  // first constant, fine level
    double drift = 0.0;      // largest drift over the constants
    bool vacuous = false;    // hypotheses failed on every case
    bool passed = false;     // every check holds
    std::string note;
    double runtime = 0.0;    // seconds; serialized only on request

    nlohmann::json to_json(bool with_runtime = false) const;
    std::string to_text(bool with_runtime = false) const;
    static SuiteReport from_json(const nlohmann::json& j);
};

// A corpus function on the reference interval [-4, 4], mapped affinely onto
// the domain.
struct CorpusFunction {
    std::string label;
    std::function<double(double)> profile;
    bool compact = false;  // vanishes outside [-3, 3]
};
std::vector<CorpusFunction> function_corpus(std::size_t count, std::uint64_t seed);
GridFunction sample_corpus(const Domain& d, const CorpusFunction& f);

// Weights defined in continuous coordinates and sampled as cell averages, so
// both refinement levels see the same weight.
std::vector<std::pair<std::string, Weight>> verify_weight_corpus(const Domain& d, std::uint64_t seed);

// Caches the objects shared between suites at both levels.
class VerifyContext {
public:
    explicit VerifyContext(VerifyConfig cfg);
    ~VerifyContext();

    const VerifyConfig& config() const { return cfg_; }
    std::size_t levels() const { return 2; }
    const Domain& domain(std::size_t level) const;
    const KernelField& field(std::size_t level) const;
    const std::vector<CorpusFunction>& corpus() const { return corpus_; }
    const std::vector<GridFunction>& functions(std::size_t level) const;
    const std::vector<std::pair<std::string, Weight>>& weights(std::size_t level) const;
    const Weight& weight(std::size_t level, const std::string& name) const;

    // Domination certificates (which carry S_a, S~_a and S_2a) for every corpus function.
    const std::vector<DominationCertificate>& certificates(std::size_t level, double alpha);
    // Uncentered maximal functions of the corpus.
    const std::vector<GridFunction>& maximals(std::size_t level);

    // Runs fn(i) for i < count on the configured number of workers.
    void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) const;

private:
    struct Level;
    VerifyConfig cfg_;
    std::vector<CorpusFunction> corpus_;
    std::vector<std::unique_ptr<Level>> levels_;
};

std::vector<std::string> suite_names();
std::string suite_statement(const std::string& id);
SuiteReport run_suite(VerifyContext& ctx, const std::string& id);
std::vector<SuiteReport> run_all(VerifyContext& ctx);

// One JSON document / text block for a list of reports.
nlohmann::json reports_to_json(const std::vector<SuiteReport>& reports, bool with_runtime = false);
std::string reports_to_text(const std::vector<SuiteReport>& reports, bool with_runtime = false);
// Inverse of reports_to_json; runtime is restored when present.
std::vector<SuiteReport> reports_from_json(const nlohmann::json& j);

}  // namespace conelab
