#include "hgcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hgcnn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ClassCounts {
    long genuine = 0;
    long attacks = 0;
};

ClassCounts count_classes(const ScoreSet& scores) {
    ClassCounts c;
    for (const ScoreRecord& r : scores.records) (r.genuine ? c.genuine : c.attacks)++;
    return c;
}

std::string format_rate(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void ScoreSet::validate(bool need_both_classes) const {
    if (records.empty()) throw std::invalid_argument("scores: empty score set");
    for (const ScoreRecord& r : records)
        if (!std::isfinite(r.score))
            throw std::invalid_argument("scores: non-finite score for id '" + r.id + "'");
    if (need_both_classes) {
        const ClassCounts c = count_classes(*this);
        if (c.genuine == 0 || c.attacks == 0)
            throw std::invalid_argument("scores: both classes required, got " +
                                        std::to_string(c.genuine) + " genuine / " +
                                        std::to_string(c.attacks) + " attacks");
    }
}

std::pair<double, double> far_frr(const ScoreSet& scores, double threshold) {
    scores.validate(true);
    long fa = 0, fr = 0;
    const ClassCounts c = count_classes(scores);
    for (const ScoreRecord& r : scores.records) {
        const bool accepted = r.score >= threshold;
        if (!r.genuine && accepted) ++fa;
        if (r.genuine && !accepted) ++fr;
    }
    return {static_cast<double>(fa) / c.attacks, static_cast<double>(fr) / c.genuine};
}

std::vector<RocPoint> roc_curve(const ScoreSet& scores) {
    scores.validate(true);
    const ClassCounts c = count_classes(scores);

    // Sort (score, genuine) ascending; prefix counts give FRR, suffix FAR.
    std::vector<std::pair<double, bool>> sorted;
    sorted.reserve(scores.size());
    for (const ScoreRecord& r : scores.records) sorted.emplace_back(r.score, r.genuine);
    std::sort(sorted.begin(), sorted.end());

    std::vector<RocPoint> points;
    points.push_back({-kInf, 1.0, 0.0});  // accept everything

    long genuine_below = 0, attacks_below = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double t = sorted[i].first;
        // Threshold at a score accepts that score, so counts "below" exclude it.
        points.push_back({t, static_cast<double>(c.attacks - attacks_below) / c.attacks,
                          static_cast<double>(genuine_below) / c.genuine});
        while (i < sorted.size() && sorted[i].first == t) {
            (sorted[i].second ? genuine_below : attacks_below)++;
            ++i;
        }
    }
    points.push_back({kInf, 0.0, 1.0});  // reject everything
    return points;
}

EerResult eer(const ScoreSet& scores) {
    const std::vector<RocPoint> points = roc_curve(scores);
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double d0 = points[i].far - points[i].frr;
        const double d1 = points[i + 1].far - points[i + 1].frr;
        if (d0 < 0.0 || d1 > 0.0) continue;  // crossing is where FAR-FRR changes sign
        if (d0 == 0.0) return {points[i].far, std::isfinite(points[i].threshold)
                                                  ? points[i].threshold
                                                  : points[i + 1].threshold};
        const double alpha = d0 / (d0 - d1);
        const double rate = points[i].far + alpha * (points[i + 1].far - points[i].far);
        double th;
        if (!std::isfinite(points[i].threshold))
            th = points[i + 1].threshold;
        else if (!std::isfinite(points[i + 1].threshold))
            th = points[i].threshold;
        else if (d1 == 0.0)
            // The upper point realizes the EER exactly, and so does every
            // threshold in the half-open score gap below it. The midpoint
            // keeps the largest margin to both classes instead of sitting
            // on the weakest accepted genuine score.
            th = 0.5 * (points[i].threshold + points[i + 1].threshold);
        else
            th = points[i].threshold + alpha * (points[i + 1].threshold - points[i].threshold);
        return {rate, th};
    }
    throw std::logic_error("eer: no FAR/FRR crossing found");  // unreachable on valid curves
}

double hter(const ScoreSet& scores, const Threshold& th) {
    const auto [far, frr] = far_frr(scores, th.value);
    return 0.5 * (far + frr);
}

AttackErrorReport apcer_bpcer_acer(const ScoreSet& scores, const Threshold& th) {
    scores.validate(true);
    AttackErrorReport rep;
    long attacks = 0, attacks_accepted = 0, genuine = 0, genuine_rejected = 0;
    std::map<std::string, std::pair<long, long>> per_type;  // type -> (count, accepted)
    for (const ScoreRecord& r : scores.records) {
        const bool accepted = r.score >= th.value;
        if (r.genuine) {
            ++genuine;
            if (!accepted) ++genuine_rejected;
        } else {
            ++attacks;
            auto& t = per_type[r.attack_type];
            ++t.first;
            if (accepted) {
                ++attacks_accepted;
                ++t.second;
            }
        }
    }
    rep.apcer = static_cast<double>(attacks_accepted) / attacks;
    rep.bpcer = static_cast<double>(genuine_rejected) / genuine;
    rep.acer = 0.5 * (rep.apcer + rep.bpcer);
    rep.apcer_max = 0.0;
    for (const auto& [type, counts] : per_type) {
        const double v = static_cast<double>(counts.second) / counts.first;
        rep.apcer_by_type[type] = v;
        rep.apcer_max = std::max(rep.apcer_max, v);
    }
    return rep;
}

std::vector<double> tdr_at_fdr(const ScoreSet& scores, const std::vector<double>& fdr_targets) {
    const std::vector<RocPoint> points = roc_curve(scores);

    // Ascending thresholds make both FDR and TDR non-decreasing; keep the
    // best TDR per distinct FDR to get a strictly increasing polyline.
    std::vector<std::pair<double, double>> line;  // (fdr, tdr)
    for (const RocPoint& p : points) {
        if (!line.empty() && line.back().first == p.fdr())
            line.back().second = std::max(line.back().second, p.tdr());
        else
            line.emplace_back(p.fdr(), p.tdr());
    }

    std::vector<double> out;
    out.reserve(fdr_targets.size());
    for (const double target : fdr_targets) {
        if (!(target >= 0.0 && target <= 1.0))
            throw std::invalid_argument("tdr_at_fdr: FDR target outside [0,1]");
        std::size_t i = 0;
        while (i + 1 < line.size() && line[i + 1].first <= target) ++i;
        if (i + 1 == line.size() || line[i].first == target) {
            out.push_back(line[i].second);
        } else {
            const auto [f0, t0] = line[i];
            const auto [f1, t1] = line[i + 1];
            out.push_back(t0 + (t1 - t0) * (target - f0) / (f1 - f0));
        }
    }
    return out;
}

double auc(const ScoreSet& scores) {
    const std::vector<RocPoint> points = roc_curve(scores);
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double dx = points[i].far - points[i + 1].far;  // FAR decreases
        const double y0 = 1.0 - points[i].frr;
        const double y1 = 1.0 - points[i + 1].frr;
        area += dx * 0.5 * (y0 + y1);
    }
    return area;
}

double accuracy(const ScoreSet& scores, const Threshold& th) {
    scores.validate(false);
    long correct = 0;
    for (const ScoreRecord& r : scores.records)
        if ((r.score >= th.value) == r.genuine) ++correct;
    return static_cast<double>(correct) / scores.size();
}

MetricMap loocv_protocol(const std::vector<std::string>& subjects,
                         const std::function<MetricMap(const std::string&)>& runner) {
    std::set<std::string> unique(subjects.begin(), subjects.end());
    if (unique.size() < 3)
        throw std::invalid_argument("loocv_protocol: needs at least 3 distinct subjects, got " +
                                    std::to_string(unique.size()));
    MetricMap total;
    bool first = true;
    for (const std::string& held_out : unique) {
        MetricMap fold = runner(held_out);
        if (first) {
            total = std::move(fold);
            first = false;
            continue;
        }
        if (fold.size() != total.size())
            throw std::runtime_error("loocv_protocol: fold for subject '" + held_out +
                                     "' reported a different metric set");
        for (auto& [key, value] : total) {
            auto it = fold.find(key);
            if (it == fold.end())
                throw std::runtime_error("loocv_protocol: fold for subject '" + held_out +
                                         "' is missing metric '" + key + "'");
            value += it->second;
        }
    }
    for (auto& [key, value] : total) value /= static_cast<double>(unique.size());
    return total;
}

nlohmann::json metrics_report(const ScoreSet& scores, const Threshold& th,
                              const std::vector<double>& fdr_targets) {
    const ClassCounts c = count_classes(scores);
    const auto [far, frr] = far_frr(scores, th.value);
    const EerResult e = eer(scores);
    const AttackErrorReport a = apcer_bpcer_acer(scores, th);
    const std::vector<double> tdr = tdr_at_fdr(scores, fdr_targets);

    nlohmann::json by_type_counts = nlohmann::json::object();
    for (const ScoreRecord& r : scores.records)
        if (!r.genuine) by_type_counts[r.attack_type] = by_type_counts.value(r.attack_type, 0) + 1;

    nlohmann::json report;
    report["counts"] = {{"genuine", c.genuine},
                        {"attacks", c.attacks},
                        {"by_attack_type", by_type_counts}};
    report["threshold"] = {{"value", th.value}, {"provenance", th.provenance}};
    report["far"] = far;
    report["frr"] = frr;
    report["accuracy"] = accuracy(scores, th);
    report["hter"] = hter(scores, th);
    report["eer"] = {{"rate", e.rate}, {"threshold", e.threshold}};
    report["auc"] = auc(scores);
    report["apcer"] = a.apcer;
    report["apcer_by_type"] = a.apcer_by_type;
    report["apcer_max"] = a.apcer_max;
    report["bpcer"] = a.bpcer;
    report["acer"] = a.acer;
    nlohmann::json tdr_json = nlohmann::json::object();
    for (std::size_t i = 0; i < fdr_targets.size(); ++i)
        tdr_json[format_rate(fdr_targets[i])] = tdr[i];
    report["tdr_at_fdr"] = tdr_json;
    return report;
}

void save_scores(std::ostream& out, const ScoreSet& scores) {
    out << "id,subject,label,attack_type,score\n";
    char buf[64];
    for (const ScoreRecord& r : scores.records) {
        for (const std::string* field : {&r.id, &r.subject, &r.attack_type})
            if (field->find_first_of(",\n\r") != std::string::npos)
                throw std::invalid_argument("save_scores: field contains a delimiter: '" +
                                            *field + "'");
        std::snprintf(buf, sizeof buf, "%.17g", r.score);
        out << r.id << ',' << r.subject << ',' << (r.genuine ? "genuine" : "attack") << ','
            << r.attack_type << ',' << buf << '\n';
    }
}

void save_scores_file(const std::string& path, const ScoreSet& scores) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_scores: cannot open '" + path + "'");
    save_scores(out, scores);
    if (!out.good()) throw std::runtime_error("save_scores: write failed for '" + path + "'");
}

ScoreSet load_scores(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "id,subject,label,attack_type,score")
        throw std::runtime_error("load_scores: missing or malformed header");
    ScoreSet set;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != 5)
            throw std::runtime_error("load_scores: line " + std::to_string(lineno) +
                                     ": expected 5 fields, got " + std::to_string(fields.size()));
        ScoreRecord r;
        r.id = fields[0];
        r.subject = fields[1];
        if (fields[2] == "genuine")
            r.genuine = true;
        else if (fields[2] == "attack")
            r.genuine = false;
        else
            throw std::runtime_error("load_scores: line " + std::to_string(lineno) +
                                     ": unknown label '" + fields[2] + "'");
        r.attack_type = fields[3];
        char* end = nullptr;
        r.score = std::strtod(fields[4].c_str(), &end);
        if (end == fields[4].c_str() || *end != '\0' || !std::isfinite(r.score))
            throw std::runtime_error("load_scores: line " + std::to_string(lineno) +
                                     ": bad score '" + fields[4] + "'");
        set.records.push_back(std::move(r));
    }
    return set;
}

ScoreSet load_scores_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_scores: cannot open '" + path + "'");
    return load_scores(in);
}

}  // namespace hgcnn
