#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>
#include <string>
#include <utility>

#include "vecchia/error.hpp"
#include "vecchia/preprocess.hpp"

namespace vecchia {

namespace {

// (squared distance, index); lexicographic order is the tie-break rule.
using Candidate = std::pair<double, std::size_t>;

// Bounded max-heap keeping the k best candidates.
class BestK {
 public:
  explicit BestK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  bool full() const { return heap_.size() == k_; }
  const Candidate& worst() const { return heap_.front(); }

  void offer(const Candidate& c) {
    if (k_ == 0) return;
    if (!full()) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  std::vector<Candidate> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end());
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

void fill_row(NeighborArray& nn, std::size_t i, const std::vector<Candidate>& best) {
  auto row = nn.row(i);
  row[0] = static_cast<std::int64_t>(i);
  for (std::size_t c = 0; c < best.size(); ++c) {
    row[c + 1] = static_cast<std::int64_t>(best[c].second);
  }
}

void check_m(std::size_t m) {
  if (m < 1) fail(ErrorCode::InvalidArgument, "neighbor count m must be >= 1");
}

class KdTree {
 public:
  explicit KdTree(const Matrix& locs) : locs_(locs), d_(locs.cols()) {
    order_.resize(locs.rows());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (!order_.empty()) build(0, order_.size());
  }

  // k best points with index < limit, nearest to `query`.
  std::vector<Candidate> query(const double* query, std::size_t limit, std::size_t k) const {
    BestK best(k);
    if (k > 0 && !nodes_.empty()) search(0, query, limit, best);
    return std::move(best).sorted();
  }

 private:
  static constexpr std::size_t kLeafSize = 16;

  struct Node {
    std::size_t begin = 0, end = 0;
    std::size_t left = 0, right = 0;  // 0 marks a leaf (root is never a child)
    std::size_t min_index = 0;
    std::vector<double> lo, hi;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({});
    Node node;
    node.begin = begin;
    node.end = end;
    node.lo.assign(d_, std::numeric_limits<double>::infinity());
    node.hi.assign(d_, -std::numeric_limits<double>::infinity());
    node.min_index = std::numeric_limits<std::size_t>::max();
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t i = order_[t];
      node.min_index = std::min(node.min_index, i);
      for (std::size_t c = 0; c < d_; ++c) {
        node.lo[c] = std::min(node.lo[c], locs_(i, c));
        node.hi[c] = std::max(node.hi[c], locs_(i, c));
      }
    }
    if (end - begin > kLeafSize) {
      std::size_t axis = 0;
      for (std::size_t c = 1; c < d_; ++c) {
        if (node.hi[c] - node.lo[c] > node.hi[axis] - node.lo[axis]) axis = c;
      }
      if (node.hi[axis] > node.lo[axis]) {
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) {
                           return locs_(a, axis) < locs_(b, axis);
                         });
        node.left = build(begin, mid);
        node.right = build(mid, end);
      }
    }
    nodes_[id] = std::move(node);
    return id;
  }

  double box_distance(const Node& node, const double* q) const {
    double s = 0.0;
    for (std::size_t c = 0; c < d_; ++c) {
      double gap = 0.0;
      if (q[c] < node.lo[c]) {
        gap = node.lo[c] - q[c];
      } else if (q[c] > node.hi[c]) {
        gap = q[c] - node.hi[c];
      }
      s += gap * gap;
    }
    return s;
  }

  void search(std::size_t id, const double* q, std::size_t limit, BestK& best) const {
    const Node& node = nodes_[id];
    if (node.min_index >= limit) return;
    // strict comparison: an equal bound may still hold a smaller-index tie
    if (best.full() && box_distance(node, q) > best.worst().first) return;
    if (node.left == 0) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const std::size_t j = order_[t];
        if (j >= limit) continue;
        best.offer({squared_distance(q, locs_.row(j).data(), d_), j});
      }
      return;
    }
    const double dl = box_distance(nodes_[node.left], q);
    const double dr = box_distance(nodes_[node.right], q);
    if (dl <= dr) {
      search(node.left, q, limit, best);
      search(node.right, q, limit, best);
    } else {
      search(node.right, q, limit, best);
      search(node.left, q, limit, best);
    }
  }

  const Matrix& locs_;
  std::size_t d_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace

std::size_t NeighborArray::count(std::size_t i) const {
  const auto r = row(i);
  std::size_t k = 0;
  while (k < r.size() && r[k] != kSentinel) ++k;
  return k;
}

void validate_neighbor_array(const NeighborArray& nn) {
  const std::size_t m = nn.m();
  for (std::size_t i = 0; i < nn.n(); ++i) {
    const auto r = nn.row(i);
    const std::string where = "neighbor row " + std::to_string(i);
    if (r[0] != static_cast<std::int64_t>(i)) {
      fail(ErrorCode::InvalidArgument, where + " does not start with its own index");
    }
    const std::size_t k = nn.count(i);
    if (k != std::min(i + 1, m + 1)) {
      fail(ErrorCode::InvalidArgument, where + " has " + std::to_string(k) + " entries");
    }
    for (std::size_t c = k; c < r.size(); ++c) {
      if (r[c] != NeighborArray::kSentinel) {
        fail(ErrorCode::InvalidArgument, where + " has entries after a sentinel");
      }
    }
    for (std::size_t a = 1; a < k; ++a) {
      if (r[a] < 0 || r[a] >= static_cast<std::int64_t>(i)) {
        fail(ErrorCode::InvalidArgument, where + " references a non-predecessor");
      }
      for (std::size_t b = 1; b < a; ++b) {
        if (r[a] == r[b]) fail(ErrorCode::InvalidArgument, where + " repeats an index");
      }
    }
  }
}

NeighborArray find_ordered_neighbors_exhaustive(const Matrix& locs, std::size_t m) {
  check_m(m);
  const std::size_t n = locs.rows();
  const std::size_t d = locs.cols();
  NeighborArray nn(n, m);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t si = 0; si < sn; ++si) {
    const auto i = static_cast<std::size_t>(si);
    BestK best(std::min(i, m));
    const double* qi = locs.row(i).data();
    for (std::size_t j = 0; j < i; ++j) {
      best.offer({squared_distance(qi, locs.row(j).data(), d), j});
    }
    fill_row(nn, i, std::move(best).sorted());
  }
  return nn;
}

NeighborArray find_ordered_neighbors_kdtree(const Matrix& locs, std::size_t m) {
  check_m(m);
  const std::size_t n = locs.rows();
  NeighborArray nn(n, m);
  const KdTree tree(locs);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t si = 0; si < sn; ++si) {
    const auto i = static_cast<std::size_t>(si);
    fill_row(nn, i, tree.query(locs.row(i).data(), i, std::min(i, m)));
  }
  return nn;
}

NeighborArray find_ordered_neighbors(const Matrix& locs, std::size_t m, NeighborSearch method) {
  return method == NeighborSearch::Exhaustive ? find_ordered_neighbors_exhaustive(locs, m)
                                              : find_ordered_neighbors_kdtree(locs, m);
}

std::vector<std::size_t> nearest_rows(const Matrix& locs, std::span<const double> query,
                                      std::size_t k) {
  if (query.size() != locs.cols()) {
    fail(ErrorCode::DimensionMismatch, "query dimension does not match locations");
  }
  BestK best(std::min(k, locs.rows()));
  for (std::size_t j = 0; j < locs.rows(); ++j) {
    best.offer({squared_distance(query.data(), locs.row(j).data(), locs.cols()), j});
  }
  std::vector<std::size_t> out;
  for (const auto& c : std::move(best).sorted()) out.push_back(c.second);
  return out;
}

std::vector<std::size_t> nearest_rows_batch(const Matrix& locs, const Matrix& queries,
                                            std::size_t k) {
  if (queries.cols() != locs.cols()) {
    fail(ErrorCode::DimensionMismatch, "query dimension does not match locations");
  }
  k = std::min(k, locs.rows());
  std::vector<std::size_t> out(queries.rows() * k);
  const KdTree tree(locs);
  const auto sq = static_cast<std::ptrdiff_t>(queries.rows());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t st = 0; st < sq; ++st) {
    const auto t = static_cast<std::size_t>(st);
    const auto best = tree.query(queries.row(t).data(), locs.rows(), k);
    for (std::size_t a = 0; a < best.size(); ++a) out[t * k + a] = best[a].second;
  }
  return out;
}

void write_neighbor_csv(const NeighborArray& nn, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < nn.n(); ++i) {
    const auto r = nn.row(i);
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) out << ',';
      out << r[c];
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

NeighborArray read_neighbor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::vector<std::int64_t>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::int64_t> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = std::min(line.find(',', pos), line.size());
      std::int64_t value = 0;
      const char* first = line.data() + pos;
      const char* last = line.data() + comma;
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc{} || ptr != last) {
        fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) +
                                        ": bad neighbor index '" + std::string(first, last) + "'");
      }
      row.push_back(value);
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorCode::ParseError,
           path.string() + ":" + std::to_string(line_no) + ": ragged neighbor row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2) {
    fail(ErrorCode::ParseError, path.string() + ": empty neighbor file");
  }
  NeighborArray nn(rows.size(), rows.front().size() - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), nn.row(i).begin());
  }
  validate_neighbor_array(nn);
  return nn;
}

}  // namespace vecchia
