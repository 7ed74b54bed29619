#include "mcrm/probspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mcrm {

namespace {

std::string describe_block(const std::vector<int>& block) {
    std::ostringstream out;
    out << "{";
    for (std::size_t k = 0; k < block.size(); ++k) out << (k ? "," : "") << block[k];
    out << "}";
    return out.str();
}

} // namespace

FiniteProbSpace::FiniteProbSpace(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() < 1) fail(ErrorKind::NonPositiveProb, "a space needs at least one state");
    for (int i = 0; i < probs_.size(); ++i) {
        if (!(probs_(i) > 0.0) || !std::isfinite(probs_(i))) {
            std::ostringstream msg;
            msg << "probability of state " << i << " is " << probs_(i);
            fail(ErrorKind::NonPositiveProb, msg.str());
        }
    }
    const double sum = probs_.sum();
    if (std::abs(sum - 1.0) > kValueTol) {
        std::ostringstream msg;
        msg << "probabilities sum to " << sum;
        fail(ErrorKind::ProbSumMismatch, msg.str());
    }
}

FiniteProbSpace new_space(const Eigen::VectorXd& probs) { return FiniteProbSpace(probs); }

FiniteProbSpace uniform_space(int n) {
    return FiniteProbSpace(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

SigmaAlgebra::SigmaAlgebra(FiniteProbSpace space, std::vector<std::vector<int>> blocks)
    : space_(std::move(space)), blocks_(std::move(blocks)) {
    const int n = space_.n();
    block_index_.assign(n, -1);
    for (auto& block : blocks_) {
        if (block.empty()) fail(ErrorKind::ValidationError, "empty block in partition");
        std::sort(block.begin(), block.end());
        for (int state : block) {
            if (state < 0 || state >= n) {
                std::ostringstream msg;
                msg << "state " << state << " outside 0.." << n - 1 << " in block " << describe_block(block);
                fail(ErrorKind::ValidationError, msg.str());
            }
            if (block_index_[state] != -1) {
                std::ostringstream msg;
                msg << "state " << state << " appears in two blocks";
                fail(ErrorKind::ValidationError, msg.str());
            }
            block_index_[state] = 0; // marked; real index assigned after sorting blocks
        }
    }
    for (int i = 0; i < n; ++i) {
        if (block_index_[i] == -1) {
            std::ostringstream msg;
            msg << "state " << i << " not covered by any block";
            fail(ErrorKind::ValidationError, msg.str());
        }
    }
    std::sort(blocks_.begin(), blocks_.end(),
              [](const std::vector<int>& a, const std::vector<int>& b) { return a.front() < b.front(); });
    for (int b = 0; b < static_cast<int>(blocks_.size()); ++b)
        for (int state : blocks_[b]) block_index_[state] = b;
}

SigmaAlgebra SigmaAlgebra::trivial(const FiniteProbSpace& space) {
    std::vector<int> all(space.n());
    std::iota(all.begin(), all.end(), 0);
    return SigmaAlgebra(space, {all});
}

SigmaAlgebra SigmaAlgebra::discrete(const FiniteProbSpace& space) {
    std::vector<std::vector<int>> blocks;
    blocks.reserve(space.n());
    for (int i = 0; i < space.n(); ++i) blocks.push_back({i});
    return SigmaAlgebra(space, std::move(blocks));
}

bool same_space(const FiniteProbSpace& a, const FiniteProbSpace& b) { return a == b; }

void require_same_space(const FiniteProbSpace& a, const FiniteProbSpace& b, const std::string& where) {
    if (!same_space(a, b)) fail(ErrorKind::SpaceMismatch, where);
}

bool refines(const SigmaAlgebra& fine, const SigmaAlgebra& coarse) {
    require_same_space(fine.space(), coarse.space(), "refines");
    for (const auto& block : fine.blocks()) {
        const int target = coarse.block_of(block.front());
        for (int state : block)
            if (coarse.block_of(state) != target) return false;
    }
    return true;
}

SigmaAlgebra join(const SigmaAlgebra& a, const SigmaAlgebra& b) {
    require_same_space(a.space(), b.space(), "join");
    // Intersections of blocks, indexed by the pair of containing blocks.
    const int nb = b.block_count();
    std::vector<std::vector<int>> cells(static_cast<std::size_t>(a.block_count()) * nb);
    for (int state = 0; state < a.space().n(); ++state)
        cells[static_cast<std::size_t>(a.block_of(state)) * nb + b.block_of(state)].push_back(state);
    std::vector<std::vector<int>> blocks;
    for (auto& cell : cells)
        if (!cell.empty()) blocks.push_back(std::move(cell));
    return SigmaAlgebra(a.space(), std::move(blocks));
}

RandomVariable::RandomVariable(FiniteProbSpace space, Eigen::VectorXd values)
    : space_(std::move(space)), values_(std::move(values)) {
    if (values_.size() != space_.n()) fail(ErrorKind::DimMismatch, "value count differs from state count");
    if (!values_.allFinite()) fail(ErrorKind::ValidationError, "non-finite value in random variable");
}

RandomVariable RandomVariable::constant(const FiniteProbSpace& space, double value) {
    return RandomVariable(space, Eigen::VectorXd::Constant(space.n(), value));
}

RandomVector::RandomVector(FiniteProbSpace space, Eigen::MatrixXd values)
    : space_(std::move(space)), values_(std::move(values)) {
    if (values_.rows() != space_.n()) fail(ErrorKind::DimMismatch, "row count differs from state count");
    if (values_.cols() < 1) fail(ErrorKind::DimMismatch, "dimension must be at least one");
    if (!values_.allFinite()) fail(ErrorKind::ValidationError, "non-finite value in random vector");
}

RandomVector RandomVector::diagonal(const RandomVariable& alpha, int d) {
    Eigen::MatrixXd values = alpha.values().replicate(1, d);
    return RandomVector(alpha.space(), std::move(values));
}

RandomVector RandomVector::constant_rows(const FiniteProbSpace& space, const Eigen::RowVectorXd& x) {
    return RandomVector(space, x.replicate(space.n(), 1));
}

RandomVariable RandomVector::component(int j) const {
    return RandomVariable(space_, values_.col(j));
}

bool is_measurable(const RandomVariable& f, const SigmaAlgebra& g) {
    require_same_space(f.space(), g.space(), "is_measurable");
    for (const auto& block : g.blocks()) {
        const double ref = f(block.front());
        for (int state : block)
            if (std::abs(f(state) - ref) > kValueTol) return false;
    }
    return true;
}

bool is_measurable(const RandomVector& x, const SigmaAlgebra& g) {
    require_same_space(x.space(), g.space(), "is_measurable");
    for (const auto& block : g.blocks()) {
        const Eigen::RowVectorXd ref = x.row(block.front());
        for (int state : block)
            if ((x.row(state) - ref).cwiseAbs().maxCoeff() > kValueTol) return false;
    }
    return true;
}

RandomVariable cond_expectation(const RandomVariable& f, const SigmaAlgebra& g) {
    require_same_space(f.space(), g.space(), "cond_expectation");
    Eigen::VectorXd out(f.n());
    for (const auto& block : g.blocks()) {
        double mass = 0.0, acc = 0.0;
        for (int state : block) {
            mass += f.space().prob(state);
            acc += f.space().prob(state) * f(state);
        }
        const double avg = acc / mass;
        for (int state : block) out(state) = avg;
    }
    return RandomVariable(f.space(), std::move(out));
}

RandomVector cond_expectation(const RandomVector& x, const SigmaAlgebra& g) {
    require_same_space(x.space(), g.space(), "cond_expectation");
    Eigen::MatrixXd out(x.n(), x.dim());
    for (const auto& block : g.blocks()) {
        double mass = 0.0;
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(x.dim());
        for (int state : block) {
            mass += x.space().prob(state);
            acc += x.space().prob(state) * x.row(state);
        }
        acc /= mass;
        for (int state : block) out.row(state) = acc;
    }
    return RandomVector(x.space(), std::move(out));
}

namespace {

struct WeightedRow {
    Eigen::RowVectorXd row;
    double weight;
};

bool rows_equal(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).cwiseAbs().maxCoeff() <= kValueTol;
}

bool row_less(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    for (int j = 0; j < a.size(); ++j) {
        if (a(j) < b(j)) return true;
        if (a(j) > b(j)) return false;
    }
    return false;
}

/// Rows of `x` restricted to `block`, sorted lexicographically, with rows
/// equal within tolerance merged and their weights accumulated.
std::vector<WeightedRow> weighted_rows(const RandomVector& x, const std::vector<int>& block,
                                       const Eigen::VectorXd& weights) {
    std::vector<WeightedRow> rows;
    rows.reserve(block.size());
    for (int state : block) rows.push_back({x.row(state), weights(state)});
    std::sort(rows.begin(), rows.end(),
              [](const WeightedRow& a, const WeightedRow& b) { return row_less(a.row, b.row); });
    std::vector<WeightedRow> merged;
    for (auto& wr : rows) {
        if (!merged.empty() && rows_equal(merged.back().row, wr.row))
            merged.back().weight += wr.weight;
        else
            merged.push_back(std::move(wr));
    }
    return merged;
}

bool weighted_rows_equal(const std::vector<WeightedRow>& a, const std::vector<WeightedRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (!rows_equal(a[k].row, b[k].row)) return false;
        if (std::abs(a[k].weight - b[k].weight) > kValueTol) return false;
    }
    return true;
}

} // namespace

bool cond_law_equal(const RandomVector& x, const RandomVector& y, const SigmaAlgebra& g) {
    require_same_space(x.space(), g.space(), "cond_law_equal");
    require_same_space(y.space(), g.space(), "cond_law_equal");
    if (x.dim() != y.dim()) fail(ErrorKind::DimMismatch, "cond_law_equal: dimensions differ");
    for (const auto& block : g.blocks()) {
        const auto rx = weighted_rows(x, block, x.space().probs());
        const auto ry = weighted_rows(y, block, y.space().probs());
        if (!weighted_rows_equal(rx, ry)) return false;
    }
    return true;
}

bool is_independent_of(const RandomVector& x, const SigmaAlgebra& g) {
    require_same_space(x.space(), g.space(), "is_independent_of");
    // Conditional law on each block, weights normalized by block mass,
    // must coincide across blocks.
    std::vector<std::vector<WeightedRow>> per_block;
    for (const auto& block : g.blocks()) {
        double mass = 0.0;
        for (int state : block) mass += x.space().prob(state);
        Eigen::VectorXd scaled = x.space().probs() / mass;
        per_block.push_back(weighted_rows(x, block, scaled));
    }
    for (std::size_t b = 1; b < per_block.size(); ++b)
        if (!weighted_rows_equal(per_block[0], per_block[b])) return false;
    return true;
}

ProductSpace product_space(const FiniteProbSpace& s1, const FiniteProbSpace& s2) {
    const int n1 = s1.n(), n2 = s2.n();
    Eigen::VectorXd probs(n1 * n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) probs(i * n2 + j) = s1.prob(i) * s2.prob(j);
    FiniteProbSpace space(probs);

    std::vector<std::vector<int>> blocks1(n1), blocks2(n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            blocks1[i].push_back(i * n2 + j);
            blocks2[j].push_back(i * n2 + j);
        }
    SigmaAlgebra factor1(space, std::move(blocks1));
    SigmaAlgebra factor2(space, std::move(blocks2));
    return ProductSpace{std::move(space), std::move(factor1), std::move(factor2), s1, s2, n1, n2};
}

RandomVector ProductSpace::lift_factor1(const RandomVector& x1) const {
    if (x1.n() != n1) fail(ErrorKind::SpaceMismatch, "lift_factor1: wrong factor size");
    Eigen::MatrixXd values(space.n(), x1.dim());
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) values.row(i * n2 + j) = x1.row(i);
    return RandomVector(space, std::move(values));
}

RandomVector ProductSpace::lift_factor2(const RandomVector& x2) const {
    if (x2.n() != n2) fail(ErrorKind::SpaceMismatch, "lift_factor2: wrong factor size");
    Eigen::MatrixXd values(space.n(), x2.dim());
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) values.row(i * n2 + j) = x2.row(j);
    return RandomVector(space, std::move(values));
}

} // namespace mcrm
