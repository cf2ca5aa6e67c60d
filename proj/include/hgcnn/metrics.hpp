#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hgcnn {

/// One scored presentation: genuine samples carry an empty attack_type.
struct ScoreRecord {
    std::string id;
    std::string subject;
    bool genuine = false;
    std::string attack_type;  // print | replay | mask | ... ; empty for genuine
    double score = 0.0;       // genuine-class probability
};

struct ScoreSet {
    std::vector<ScoreRecord> records;

    std::size_t size() const { return records.size(); }
    /// Throws unless non-empty with finite scores (and, when required, both
    /// classes present).
    void validate(bool need_both_classes = true) const;
};

struct Threshold {
    double value = 0.5;
    std::string provenance = "fixed";  // "fixed" | "dev-EER"
};

/// Acceptance rule everywhere: accept (classify genuine) iff score >= threshold.
struct RocPoint {
    double threshold;  // -inf and +inf sentinels included
    double far;        // attacks accepted / attacks
    double frr;        // genuine rejected / genuine
    double tdr() const { return 1.0 - far; }
    double fdr() const { return frr; }
};

/// FAR/FRR at one fixed threshold.
std::pair<double, double> far_frr(const ScoreSet& scores, double threshold);

/// Operating points at every distinct score plus the two infinite sentinels,
/// sorted by ascending threshold. FAR is non-increasing, FRR non-decreasing.
std::vector<RocPoint> roc_curve(const ScoreSet& scores);

struct EerResult {
    double rate;
    double threshold;
};

/// Rate where FAR = FRR, linearly interpolated between adjacent operating
/// points when there is no exact crossing.
EerResult eer(const ScoreSet& scores);

/// (FAR + FRR) / 2 at a externally fixed threshold (conventionally the
/// dev-set EER threshold).
double hter(const ScoreSet& scores, const Threshold& th);

struct AttackErrorReport {
    double apcer = 0.0;                         // attacks accepted / attacks, overall
    std::map<std::string, double> apcer_by_type;
    double apcer_max = 0.0;                     // max over attack types
    double bpcer = 0.0;                         // genuine rejected / genuine
    double acer = 0.0;                          // (apcer + bpcer) / 2
};

AttackErrorReport apcer_bpcer_acer(const ScoreSet& scores, const Threshold& th);

/// TDR (attacks detected / attacks) on the ROC curve evaluated at each FDR
/// (genuine flagged / genuine) target, linearly interpolated between
/// operating points.
std::vector<double> tdr_at_fdr(const ScoreSet& scores, const std::vector<double>& fdr_targets);

/// Trapezoidal area over (FAR, 1-FRR); equal to the Mann-Whitney U statistic
/// normalized by n_pos * n_neg with half credit for ties.
double auc(const ScoreSet& scores);

/// Fraction of records on the correct side of the threshold.
double accuracy(const ScoreSet& scores, const Threshold& th);

using MetricMap = std::map<std::string, double>;

/// Leave-one-subject-out driver: calls runner once per unique subject (sorted
/// order) and averages the returned metrics key by key. All folds must report
/// the same keys. Requires at least 3 distinct subjects.
MetricMap loocv_protocol(const std::vector<std::string>& subjects,
                         const std::function<MetricMap(const std::string&)>& runner);

/// Full evaluation rolled into one JSON document (threshold + provenance,
/// error rates, AUC, TDR at the requested FDR targets, class counts).
nlohmann::json metrics_report(const ScoreSet& scores, const Threshold& th,
                              const std::vector<double>& fdr_targets);

/// CSV round trip, header `id,subject,label,attack_type,score`, scores
/// printed with 17 significant digits so reloading is exact.
void save_scores(std::ostream& out, const ScoreSet& scores);
void save_scores_file(const std::string& path, const ScoreSet& scores);
ScoreSet load_scores(std::istream& in);
ScoreSet load_scores_file(const std::string& path);

}  // namespace hgcnn
