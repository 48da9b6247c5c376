#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace guard::model {

using Mat = Eigen::MatrixXd;

/// Reverse-mode tape over dense double matrices. Nodes are created in
/// topological order by construction; backward() replays the tape in
/// reverse. Small and single-threaded on purpose: every run is bitwise
/// reproducible.
class Graph {
public:
    using NodeId = int;

    /// Input without gradient.
    NodeId constant(Mat value);

    /// Parameter leaf; on backward() its gradient is accumulated into
    /// *sink (which must outlive the graph and match the value's shape).
    NodeId leaf(const Mat& value, Mat* sink);

    const Mat& value(NodeId id) const { return nodes_[id].value; }
    const Mat& grad(NodeId id) const { return nodes_[id].grad; }

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId scale(NodeId a, double k);
    /// Multiply by a learnable 1x1 scalar node (the CMA gate).
    NodeId scale_by(NodeId a, NodeId scalar);
    NodeId transpose(NodeId a);
    /// Row-wise softmax; when causal, entry (i, j) with j > i is masked out.
    NodeId row_softmax(NodeId a, bool causal);
    /// Per-row RMS normalization with a [1, n] gain vector.
    NodeId rms_norm(NodeId x, NodeId gain);
    NodeId gelu(NodeId a);
    /// Rows of a table selected by index (embedding lookup).
    NodeId gather_rows(NodeId table, std::vector<int> ids);
    NodeId slice_cols(NodeId a, int first, int width);
    NodeId slice_rows(NodeId a, int first, int height);
    NodeId concat_cols(const std::vector<NodeId>& parts);
    NodeId concat_rows(const std::vector<NodeId>& parts);
    /// Row-major reinterpretation of a [1, rows*cols] row as [rows, cols].
    NodeId reshape_row(NodeId a, int rows, int cols);
    NodeId mean_rows(NodeId a);
    /// Throws ZeroNormRow on a zero row.
    NodeId l2_normalize_rows(NodeId a);
    /// Mean cross-entropy of row i against class targets[i]; rows with
    /// target < 0 are masked. Throws AllMasked when nothing is live.
    NodeId cross_entropy_rows(NodeId logits, std::vector<int> targets);

    /// Seed d(loss)/d(loss) = 1 and run the tape backwards. `loss` must be
    /// a 1x1 node. May only be called once per graph.
    void backward(NodeId loss);

private:
    struct Node {
        Mat value;
        Mat grad;
        Mat* sink = nullptr;
        std::function<void()> back;  // empty for constants/leaves
    };

    NodeId push(Mat value);
    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

}  // namespace guard::model
