#include "guard/model/graph.hpp"

#include <cmath>
#include <limits>

#include "guard/error.hpp"

namespace guard::model {

namespace {
constexpr double kRmsEps = 1e-8;
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Graph::NodeId Graph::push(Mat value) {
    Node n;
    n.grad = Mat::Zero(value.rows(), value.cols());
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Graph::NodeId Graph::constant(Mat value) { return push(std::move(value)); }

Graph::NodeId Graph::leaf(const Mat& value, Mat* sink) {
    NodeId id = push(value);
    nodes_[id].sink = sink;
    return id;
}

Graph::NodeId Graph::matmul(NodeId a, NodeId b) {
    const Mat& A = nodes_[a].value;
    const Mat& B = nodes_[b].value;
    if (A.cols() != B.rows()) throw ShapeMismatch("matmul inner dims differ");
    NodeId out = push(A * B);
    nodes_[out].back = [this, a, b, out] {
        const Mat& g = nodes_[out].grad;
        nodes_[a].grad.noalias() += g * nodes_[b].value.transpose();
        nodes_[b].grad.noalias() += nodes_[a].value.transpose() * g;
    };
    return out;
}

Graph::NodeId Graph::add(NodeId a, NodeId b) {
    const Mat& A = nodes_[a].value;
    const Mat& B = nodes_[b].value;
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw ShapeMismatch("add shapes differ");
    NodeId out = push(A + B);
    nodes_[out].back = [this, a, b, out] {
        nodes_[a].grad += nodes_[out].grad;
        nodes_[b].grad += nodes_[out].grad;
    };
    return out;
}

Graph::NodeId Graph::scale(NodeId a, double k) {
    NodeId out = push(nodes_[a].value * k);
    nodes_[out].back = [this, a, out, k] { nodes_[a].grad += nodes_[out].grad * k; };
    return out;
}

Graph::NodeId Graph::scale_by(NodeId a, NodeId scalar) {
    const Mat& s = nodes_[scalar].value;
    if (s.rows() != 1 || s.cols() != 1) throw ShapeMismatch("gate must be 1x1");
    NodeId out = push(nodes_[a].value * s(0, 0));
    nodes_[out].back = [this, a, scalar, out] {
        const Mat& g = nodes_[out].grad;
        nodes_[a].grad += g * nodes_[scalar].value(0, 0);
        nodes_[scalar].grad(0, 0) += (g.array() * nodes_[a].value.array()).sum();
    };
    return out;
}

Graph::NodeId Graph::transpose(NodeId a) {
    NodeId out = push(nodes_[a].value.transpose());
    nodes_[out].back = [this, a, out] { nodes_[a].grad += nodes_[out].grad.transpose(); };
    return out;
}

Graph::NodeId Graph::row_softmax(NodeId a, bool causal) {
    Mat y = nodes_[a].value;
    const auto rows = y.rows();
    const auto cols = y.cols();
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Eigen::Index live = causal ? std::min<Eigen::Index>(i + 1, cols) : cols;
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < live; ++j) mx = std::max(mx, y(i, j));
        double sum = 0.0;
        for (Eigen::Index j = 0; j < live; ++j) {
            y(i, j) = std::exp(y(i, j) - mx);
            sum += y(i, j);
        }
        for (Eigen::Index j = 0; j < live; ++j) y(i, j) /= sum;
        for (Eigen::Index j = live; j < cols; ++j) y(i, j) = 0.0;
    }
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, a, out] {
        const Mat& yv = nodes_[out].value;
        const Mat& gy = nodes_[out].grad;
        for (Eigen::Index i = 0; i < yv.rows(); ++i) {
            const double dot = (gy.row(i).array() * yv.row(i).array()).sum();
            nodes_[a].grad.row(i).array() +=
                (gy.row(i).array() - dot) * yv.row(i).array();
        }
    };
    return out;
}

Graph::NodeId Graph::rms_norm(NodeId x, NodeId gain) {
    const Mat& X = nodes_[x].value;
    const Mat& G = nodes_[gain].value;
    if (G.rows() != 1 || G.cols() != X.cols()) throw ShapeMismatch("rms_norm gain shape");
    const auto n = static_cast<double>(X.cols());
    Eigen::VectorXd inv_rms(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        inv_rms(i) = 1.0 / std::sqrt(X.row(i).squaredNorm() / n + kRmsEps);
    Mat y(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        y.row(i) = X.row(i).array() * G.array() * inv_rms(i);
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, x, gain, out, inv_rms, n] {
        const Mat& X2 = nodes_[x].value;
        const Mat& G2 = nodes_[gain].value;
        const Mat& gy = nodes_[out].grad;
        for (Eigen::Index i = 0; i < X2.rows(); ++i) {
            const double ir = inv_rms(i);
            const double proj =
                (gy.row(i).array() * G2.array() * X2.row(i).array()).sum();
            nodes_[x].grad.row(i).array() +=
                gy.row(i).array() * G2.array() * ir -
                X2.row(i).array() * (proj * ir * ir * ir / n);
            nodes_[gain].grad.array() += gy.row(i).array() * X2.row(i).array() * ir;
        }
    };
    return out;
}

Graph::NodeId Graph::gelu(NodeId a) {
    const Mat& X = nodes_[a].value;
    Mat y = X.unaryExpr(
        [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); });
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, a, out] {
        const Mat& X2 = nodes_[a].value;
        const Mat& gy = nodes_[out].grad;
        nodes_[a].grad.array() +=
            gy.array() * X2.unaryExpr([](double v) {
                            return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) +
                                   v * kInvSqrt2Pi * std::exp(-0.5 * v * v);
                        }).array();
    };
    return out;
}

Graph::NodeId Graph::gather_rows(NodeId table, std::vector<int> ids) {
    const Mat& T = nodes_[table].value;
    Mat y(static_cast<Eigen::Index>(ids.size()), T.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= T.rows()) throw ShapeMismatch("gather index out of range");
        y.row(static_cast<Eigen::Index>(i)) = T.row(ids[i]);
    }
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, table, out, ids = std::move(ids)] {
        const Mat& gy = nodes_[out].grad;
        for (std::size_t i = 0; i < ids.size(); ++i)
            nodes_[table].grad.row(ids[i]) += gy.row(static_cast<Eigen::Index>(i));
    };
    return out;
}

Graph::NodeId Graph::slice_cols(NodeId a, int first, int width) {
    const Mat& A = nodes_[a].value;
    if (first < 0 || width < 1 || first + width > A.cols())
        throw ShapeMismatch("slice_cols out of range");
    NodeId out = push(A.middleCols(first, width));
    nodes_[out].back = [this, a, out, first, width] {
        nodes_[a].grad.middleCols(first, width) += nodes_[out].grad;
    };
    return out;
}

Graph::NodeId Graph::slice_rows(NodeId a, int first, int height) {
    const Mat& A = nodes_[a].value;
    if (first < 0 || height < 1 || first + height > A.rows())
        throw ShapeMismatch("slice_rows out of range");
    NodeId out = push(A.middleRows(first, height));
    nodes_[out].back = [this, a, out, first, height] {
        nodes_[a].grad.middleRows(first, height) += nodes_[out].grad;
    };
    return out;
}

Graph::NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat of nothing");
    Eigen::Index rows = nodes_[parts[0]].value.rows();
    Eigen::Index cols = 0;
    for (NodeId p : parts) {
        if (nodes_[p].value.rows() != rows) throw ShapeMismatch("concat_cols row mismatch");
        cols += nodes_[p].value.cols();
    }
    Mat y(rows, cols);
    Eigen::Index at = 0;
    for (NodeId p : parts) {
        y.middleCols(at, nodes_[p].value.cols()) = nodes_[p].value;
        at += nodes_[p].value.cols();
    }
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, parts, out] {
        Eigen::Index at2 = 0;
        for (NodeId p : parts) {
            nodes_[p].grad += nodes_[out].grad.middleCols(at2, nodes_[p].value.cols());
            at2 += nodes_[p].value.cols();
        }
    };
    return out;
}

Graph::NodeId Graph::concat_rows(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat of nothing");
    Eigen::Index cols = nodes_[parts[0]].value.cols();
    Eigen::Index rows = 0;
    for (NodeId p : parts) {
        if (nodes_[p].value.cols() != cols) throw ShapeMismatch("concat_rows col mismatch");
        rows += nodes_[p].value.rows();
    }
    Mat y(rows, cols);
    Eigen::Index at = 0;
    for (NodeId p : parts) {
        y.middleRows(at, nodes_[p].value.rows()) = nodes_[p].value;
        at += nodes_[p].value.rows();
    }
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, parts, out] {
        Eigen::Index at2 = 0;
        for (NodeId p : parts) {
            nodes_[p].grad += nodes_[out].grad.middleRows(at2, nodes_[p].value.rows());
            at2 += nodes_[p].value.rows();
        }
    };
    return out;
}

Graph::NodeId Graph::reshape_row(NodeId a, int rows, int cols) {
    const Mat& A = nodes_[a].value;
    if (A.rows() != 1 || A.cols() != static_cast<Eigen::Index>(rows) * cols)
        throw ShapeMismatch("reshape_row expects a [1, rows*cols] input");
    Mat y(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) y(i, j) = A(0, i * cols + j);
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, a, out, rows, cols] {
        const Mat& gy = nodes_[out].grad;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) nodes_[a].grad(0, i * cols + j) += gy(i, j);
    };
    return out;
}

Graph::NodeId Graph::mean_rows(NodeId a) {
    const Mat& A = nodes_[a].value;
    NodeId out = push(A.colwise().mean());
    nodes_[out].back = [this, a, out] {
        const double inv = 1.0 / static_cast<double>(nodes_[a].value.rows());
        nodes_[a].grad.rowwise() += (nodes_[out].grad * inv).row(0);
    };
    return out;
}

Graph::NodeId Graph::l2_normalize_rows(NodeId a) {
    const Mat& A = nodes_[a].value;
    Eigen::VectorXd inv_norm(A.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double norm = A.row(i).norm();
        if (norm == 0.0) throw ZeroNormRow("zero row in l2_normalize_rows");
        inv_norm(i) = 1.0 / norm;
    }
    Mat y(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) y.row(i) = A.row(i) * inv_norm(i);
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, a, out, inv_norm] {
        const Mat& yv = nodes_[out].value;
        const Mat& gy = nodes_[out].grad;
        for (Eigen::Index i = 0; i < yv.rows(); ++i) {
            const double dot = gy.row(i).dot(yv.row(i));
            nodes_[a].grad.row(i) += (gy.row(i) - dot * yv.row(i)) * inv_norm(i);
        }
    };
    return out;
}

Graph::NodeId Graph::cross_entropy_rows(NodeId logits, std::vector<int> targets) {
    const Mat& L = nodes_[logits].value;
    if (static_cast<Eigen::Index>(targets.size()) != L.rows())
        throw ShapeMismatch("one target per logits row required");
    int live = 0;
    double total = 0.0;
    Mat softmax(L.rows(), L.cols());
    for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const double mx = L.row(i).maxCoeff();
        const Eigen::ArrayXd ex = (L.row(i).array() - mx).exp();
        const double sum = ex.sum();
        softmax.row(i) = (ex / sum).matrix();
        const int t = targets[static_cast<std::size_t>(i)];
        if (t < 0) continue;
        if (t >= L.cols()) throw ShapeMismatch("target class out of range");
        total += std::log(sum) + mx - L(i, t);
        ++live;
    }
    if (live == 0) throw AllMasked("every position is masked");
    Mat y(1, 1);
    y(0, 0) = total / static_cast<double>(live);
    NodeId out = push(std::move(y));
    nodes_[out].back = [this, logits, out, targets = std::move(targets),
                        softmax = std::move(softmax), live] {
        const double g = nodes_[out].grad(0, 0) / static_cast<double>(live);
        for (Eigen::Index i = 0; i < softmax.rows(); ++i) {
            const int t = targets[static_cast<std::size_t>(i)];
            if (t < 0) continue;
            nodes_[logits].grad.row(i) += softmax.row(i) * g;
            nodes_[logits].grad(i, t) -= g;
        }
    };
    return out;
}

void Graph::backward(NodeId loss) {
    if (ran_backward_) throw PreconditionViolation("backward() already ran on this graph");
    ran_backward_ = true;
    Node& last = nodes_[loss];
    if (last.value.rows() != 1 || last.value.cols() != 1)
        throw ShapeMismatch("loss must be scalar");
    last.grad(0, 0) = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
        if (it->back) it->back();
    for (auto& n : nodes_)
        if (n.sink != nullptr) *n.sink += n.grad;
}

}  // namespace guard::model
