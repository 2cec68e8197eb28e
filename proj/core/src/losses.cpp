#include "hofsurf/losses.hpp"

#include "hofsurf/error.hpp"
#include "hofsurf/parallel.hpp"

#include <optional>

namespace hofsurf {

void LossWeights::validate() const {
    if (!(lambda_cd >= 0.0) || !(lambda_cos >= 0.0)) {
        throw DomainError("loss weights must be non-negative");
    }
}

namespace {

std::vector<std::size_t> nearest_indices(const KdTree& tree, const std::vector<Vec3>& queries) {
    std::vector<std::size_t> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = tree.nearest(queries[i]).index;
    });
    return out;
}

PointCloud cloud_of(ad::Var v, const char* what) {
    const Tensor& t = v.value();
    if (t.rank() != 2 || t.dim(1) != 3) {
        throw DimensionError(std::string(what) + " must be [n x 3], got " + to_string(t.shape()));
    }
    if (!t.all_finite()) throw NumericalError(std::string(what) + " contain non-finite values");
    return PointCloud::from_tensor(t);
}

} // namespace

ad::Var chamfer_loss(ad::Var x, ad::Var y, const KdTree* x_index, const KdTree* y_index) {
    const PointCloud xs = cloud_of(x, "chamfer operand X");
    const PointCloud ys = cloud_of(y, "chamfer operand Y");

    std::optional<KdTree> own_x, own_y;
    if (!x_index) x_index = &own_x.emplace(xs.points);
    if (!y_index) y_index = &own_y.emplace(ys.points);
    if (x_index->size() != xs.size() || y_index->size() != ys.size()) {
        throw ContractError("chamfer_loss: prebuilt index does not match its operand");
    }

    const auto y_for_x = nearest_indices(*y_index, xs.points);
    const auto x_for_y = nearest_indices(*x_index, ys.points);

    ad::Var x_to_y = ad::mean(ad::row_norm(ad::sub(x, ad::gather_rows(y, y_for_x))));
    ad::Var y_to_x = ad::mean(ad::row_norm(ad::sub(ad::gather_rows(x, x_for_y), y)));
    return ad::add(x_to_y, y_to_x);
}

CosineLoss cosine_surface_loss(const OrientedPointCloud& gt, ad::Var position, ad::Var direction) {
    if (gt.empty()) throw DomainError("cosine loss needs a non-empty ground truth");
    const PointCloud pred = cloud_of(position, "predicted positions");
    const PointCloud dirs = cloud_of(direction, "predicted directions");
    if (pred.size() != dirs.size()) {
        throw DimensionError("positions and directions have different row counts");
    }

    std::vector<std::size_t> usable;
    std::vector<Vec3> usable_points;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (dirs.points[i].norm() >= kDegenerateDirection) {
            usable.push_back(i);
            usable_points.push_back(pred.points[i]);
        }
    }
    if (usable.empty()) throw DomainError("every predicted direction is degenerate");

    const KdTree tree(usable_points);
    auto matched = nearest_indices(tree, gt.points);
    for (std::size_t& m : matched) m = usable[m];

    std::vector<double> normals;
    normals.reserve(gt.size() * 3);
    for (const Vec3& n : gt.normals) normals.insert(normals.end(), {n.x(), n.y(), n.z()});
    ad::Tape& tape = direction.tape();
    ad::Var gt_normals = tape.constant(Tensor({gt.size(), 3}, std::move(normals)));

    ad::Var unit = ad::normalize_rows(ad::gather_rows(direction, matched));
    // Rounding can push |n . u| a hair above 1; the clamp keeps the loss in [0, 1].
    ad::Var agreement = ad::mean(ad::clamp(ad::abs(ad::row_dot(unit, gt_normals)), 0.0, 1.0));
    return {ad::add_scalar(ad::scale(agreement, -1.0), 1.0), pred.size() - usable.size()};
}

TotalLoss total_loss(const OrientedPointCloud& gt, const MappingOutput& pred,
                     const LossWeights& weights, const KdTree* gt_index) {
    weights.validate();
    if (gt.empty()) throw DomainError("total loss needs a non-empty ground truth");
    ad::Tape& tape = pred.position.tape();
    ad::Var gt_points = tape.constant(gt.positions().to_tensor());
    ad::Var cd = chamfer_loss(pred.position, gt_points, nullptr, gt_index);

    TotalLoss result;
    result.report.chamfer = cd.value().item();
    ad::Var weighted_cd = ad::scale(cd, weights.lambda_cd);

    if (weights.lambda_cos == 0.0) {
        // Cosine term reported for logging only; it never enters the graph.
        std::size_t degenerate = 0;
        try {
            ad::Tape side;
            CosineLoss cos = cosine_surface_loss(gt, side.constant(pred.position.value()),
                                                 side.constant(pred.direction.value()));
            result.report.cosine = cos.value.value().item();
            degenerate = cos.degenerate_count;
        } catch (const DomainError&) {
            result.report.cosine = 1.0;
            degenerate = pred.direction.value().dim(0);
        }
        result.report.degenerate_count = degenerate;
        result.value = weighted_cd;
        result.report.total = result.value.value().item();
        return result;
    }

    CosineLoss cos = cosine_surface_loss(gt, pred.position, pred.direction);
    result.report.cosine = cos.value.value().item();
    result.report.degenerate_count = cos.degenerate_count;
    result.value = ad::add(weighted_cd, ad::scale(cos.value, weights.lambda_cos));
    result.report.total = result.value.value().item();
    return result;
}

} // namespace hofsurf
