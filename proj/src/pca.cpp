#include "rpy/pca.hpp"

#include "rpy/rng.hpp"

#include <cmath>

namespace rpy::pca {

PcaResult principal_components(const Matrix& data, Index num_components, double tolerance,
                               Index max_iterations) {
    if (data.rows() < 2) throw DegenerateData("pca: need at least two samples");
    if (num_components <= 0 || num_components > data.cols())
        throw InvalidParameter("pca: component count must lie in [1, dim]");

    PcaResult result;
    result.mean = data.colwise().mean();
    const Matrix centered = data.rowwise() - result.mean.transpose();
    const double denom = static_cast<double>(data.rows() - 1);

    const double total_variance = centered.squaredNorm() / denom;
    if (total_variance < 1e-12) throw DegenerateData("pca: total variance below tolerance");

    result.components = Matrix::Zero(num_components, data.cols());
    result.explained_variance = Vector::Zero(num_components);

    Rng rng(0x70636131ULL);
    for (Index c = 0; c < num_components; ++c) {
        Vector v = rng.normal_vector(data.cols());
        // Keep the start vector out of the span of found components.
        for (Index k = 0; k < c; ++k) v -= v.dot(result.components.row(k)) * result.components.row(k).transpose();
        v.normalize();

        double eigenvalue = 0.0;
        for (Index it = 0; it < max_iterations; ++it) {
            Vector w = centered.transpose() * (centered * v) / denom;
            for (Index k = 0; k < c; ++k)
                w -= result.explained_variance[k] * result.components.row(k).dot(v) *
                     result.components.row(k).transpose();
            const double norm = w.norm();
            if (norm < 1e-15) break; // remaining variance exhausted
            w /= norm;
            const double drift = std::min((w - v).norm(), (w + v).norm());
            v = w;
            eigenvalue = norm;
            if (drift < tolerance) break;
        }
        // Sign convention: first nonzero coordinate positive.
        for (Index j = 0; j < v.size(); ++j) {
            if (std::abs(v[j]) > 1e-12) {
                if (v[j] < 0.0) v = -v;
                break;
            }
        }
        result.components.row(c) = v.transpose();
        result.explained_variance[c] = eigenvalue;
    }

    result.projections = centered * result.components.transpose();
    return result;
}

} // namespace rpy::pca
