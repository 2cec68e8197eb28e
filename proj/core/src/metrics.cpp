#include "hofsurf/metrics.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/kdtree.hpp"
#include "hofsurf/numeric.hpp"
#include "hofsurf/parallel.hpp"
#include "hofsurf/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace hofsurf {

void EvalConfig::validate() const {
    if (n_pred_samples == 0 || n_gt_samples == 0 || n_cosine_samples == 0) {
        throw DomainError("evaluation sample counts must be >= 1");
    }
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (n_cosine_samples > n_gt_samples) {
        throw DomainError("cosine samples are drawn from the ground-truth samples and cannot exceed them");
    }
}

namespace {

void require_nonempty(const PointCloud& c, const char* what) {
    if (c.empty()) throw DomainError(std::string(what) + " point set is empty");
}

// Squared distance from every query to its nearest point in `tree`.
std::vector<Neighbor> nearest_all(const KdTree& tree, const std::vector<Vec3>& queries) {
    std::vector<Neighbor> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = tree.nearest(queries[i]);
    });
    return out;
}

double mean_squared_nn(const KdTree& tree, const std::vector<Vec3>& queries) {
    const auto matches = nearest_all(tree, queries);
    std::vector<double> terms(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) terms[i] = matches[i].squared_distance;
    return exact_sum(terms) / static_cast<double>(queries.size());
}

// |a . b| for unit vectors, written as 1 - min(|a - b|^2, |a + b|^2) / 2 so
// that identical (or exactly opposite) normals score exactly 1.
double unsigned_cosine(const Vec3& a, const Vec3& b) {
    const double minus = squared_distance(a, b);
    const double plus = squared_distance(a, -b);
    return std::clamp(1.0 - std::min(minus, plus) / 2.0, 0.0, 1.0);
}

bool within(double squared, double tau, TauMode mode) {
    return mode == TauMode::Squared ? squared <= tau : std::sqrt(squared) <= tau;
}

} // namespace

double eval_chamfer(const PointCloud& x, const PointCloud& y) {
    require_nonempty(x, "first");
    require_nonempty(y, "second");
    return mean_squared_nn(KdTree(y.points), x.points);
}

double eval_chamfer_symmetric(const PointCloud& x, const PointCloud& y) {
    return (eval_chamfer(x, y) + eval_chamfer(y, x)) / 2.0;
}

FScore eval_fscore_detail(const PointCloud& pred, const PointCloud& gt, double tau, TauMode mode) {
    require_nonempty(pred, "predicted");
    require_nonempty(gt, "ground-truth");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    const KdTree gt_tree(gt.points);
    const KdTree pred_tree(pred.points);
    std::size_t precise = 0;
    for (const Neighbor& nb : nearest_all(gt_tree, pred.points)) {
        precise += within(nb.squared_distance, tau, mode) ? 1 : 0;
    }
    std::size_t recalled = 0;
    for (const Neighbor& nb : nearest_all(pred_tree, gt.points)) {
        recalled += within(nb.squared_distance, tau, mode) ? 1 : 0;
    }
    FScore s;
    s.precision = static_cast<double>(precise) / static_cast<double>(pred.size());
    s.recall = static_cast<double>(recalled) / static_cast<double>(gt.size());
    const double denom = s.precision + s.recall;
    s.fscore = denom > 0.0 ? 100.0 * 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

double eval_fscore(const PointCloud& pred, const PointCloud& gt, double tau, TauMode mode) {
    return eval_fscore_detail(pred, gt, tau, mode).fscore;
}

double eval_cosine_similarity(const OrientedPointCloud& gt, const OrientedPointCloud& pred) {
    require_nonempty(gt.positions(), "ground-truth");
    require_nonempty(pred.positions(), "predicted");
    gt.validate();
    pred.validate();
    const KdTree tree(pred.points);
    const auto matches = nearest_all(tree, gt.points);
    std::vector<double> terms(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        terms[i] = unsigned_cosine(gt.normals[i], pred.normals[matches[i].index]);
    }
    return exact_sum(terms) / static_cast<double>(gt.size());
}

EvalReport evaluate_against(const OrientedPointCloud& pred, const OrientedPointCloud& gt,
                            const EvalConfig& cfg) {
    cfg.validate();
    const PointCloud p = pred.positions();
    const PointCloud g = gt.positions();
    EvalReport r;
    r.chamfer_pred_to_gt = eval_chamfer(p, g);
    r.chamfer_gt_to_pred = eval_chamfer(g, p);
    r.chamfer_sym = (r.chamfer_pred_to_gt + r.chamfer_gt_to_pred) / 2.0;
    r.fscore_tau = eval_fscore(p, g, cfg.tau, cfg.tau_mode);
    r.fscore_2tau = eval_fscore(p, g, 2.0 * cfg.tau, cfg.tau_mode);
    OrientedPointCloud cos_gt;
    const std::size_t n_cos = std::min(cfg.n_cosine_samples, gt.size());
    cos_gt.points.assign(gt.points.begin(), gt.points.begin() + static_cast<std::ptrdiff_t>(n_cos));
    cos_gt.normals.assign(gt.normals.begin(),
                          gt.normals.begin() + static_cast<std::ptrdiff_t>(n_cos));
    r.cosine_similarity = eval_cosine_similarity(cos_gt, pred);
    return r;
}

EvalReport evaluate(const OrientedPointCloud& pred, const TriangleMesh& gt_mesh,
                    const EvalConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    return evaluate_against(pred, sample_mesh_uniform(gt_mesh, cfg.n_gt_samples, seed), cfg);
}

// --- report emission --------------------------------------------------------

namespace {

std::string number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

EvalReport mean_of(const std::vector<const EvalReport*>& reports) {
    EvalReport m;
    for (const EvalReport* r : reports) {
        m.chamfer_sym += r->chamfer_sym;
        m.chamfer_pred_to_gt += r->chamfer_pred_to_gt;
        m.chamfer_gt_to_pred += r->chamfer_gt_to_pred;
        m.fscore_tau += r->fscore_tau;
        m.fscore_2tau += r->fscore_2tau;
        m.cosine_similarity += r->cosine_similarity;
    }
    const double n = static_cast<double>(reports.size());
    m.chamfer_sym /= n;
    m.chamfer_pred_to_gt /= n;
    m.chamfer_gt_to_pred /= n;
    m.fscore_tau /= n;
    m.fscore_2tau /= n;
    m.cosine_similarity /= n;
    return m;
}

std::vector<EvalRow> with_aggregates(const std::vector<EvalRow>& rows) {
    std::vector<EvalRow> out = rows;
    if (rows.empty()) return out;
    std::vector<const EvalReport*> all;
    std::map<std::string, std::vector<const EvalReport*>> by_category;
    for (const EvalRow& r : rows) {
        all.push_back(&r.report);
        if (!r.category.empty()) by_category[r.category].push_back(&r.report);
    }
    out.push_back({"mean/instance", "", mean_of(all)});
    if (!by_category.empty()) {
        std::vector<EvalReport> category_means;
        for (const auto& [name, reports] : by_category) {
            category_means.push_back(mean_of(reports));
            out.push_back({"mean/" + name, name, category_means.back()});
        }
        std::vector<const EvalReport*> ptrs;
        for (const EvalReport& r : category_means) ptrs.push_back(&r);
        out.push_back({"mean/category", "", mean_of(ptrs)});
    }
    return out;
}

} // namespace

std::string format_eval_csv(const std::vector<EvalRow>& rows, const EvalConfig& cfg) {
    std::ostringstream os;
    os << "id,category,chamfer_sym_x" << number(cfg.report_scale) << ",chamfer_pred_to_gt_x"
       << number(cfg.report_scale) << ",chamfer_gt_to_pred_x" << number(cfg.report_scale)
       << ",fscore_tau,fscore_2tau,cosine_similarity\n";
    for (const EvalRow& r : with_aggregates(rows)) {
        const EvalReport& e = r.report;
        os << r.id << ',' << r.category << ',' << number(e.chamfer_sym * cfg.report_scale) << ','
           << number(e.chamfer_pred_to_gt * cfg.report_scale) << ','
           << number(e.chamfer_gt_to_pred * cfg.report_scale) << ',' << number(e.fscore_tau)
           << ',' << number(e.fscore_2tau) << ',' << number(e.cosine_similarity) << '\n';
    }
    return os.str();
}

std::string format_eval_json(const std::vector<EvalRow>& rows, const EvalConfig& cfg) {
    nlohmann::ordered_json doc;
    doc["tau"] = cfg.tau;
    doc["tau_on"] = cfg.tau_mode == TauMode::Squared ? "squared" : "euclidean";
    doc["chamfer_scale"] = cfg.report_scale;
    auto& list = doc["rows"] = nlohmann::ordered_json::array();
    for (const EvalRow& r : with_aggregates(rows)) {
        const EvalReport& e = r.report;
        nlohmann::ordered_json row;
        row["id"] = r.id;
        row["category"] = r.category;
        row["chamfer_sym"] = e.chamfer_sym * cfg.report_scale;
        row["chamfer_pred_to_gt"] = e.chamfer_pred_to_gt * cfg.report_scale;
        row["chamfer_gt_to_pred"] = e.chamfer_gt_to_pred * cfg.report_scale;
        row["fscore_tau"] = e.fscore_tau;
        row["fscore_2tau"] = e.fscore_2tau;
        row["cosine_similarity"] = e.cosine_similarity;
        list.push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
}

} // namespace hofsurf
