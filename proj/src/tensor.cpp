#include "wgo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace wgo::num {

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

enum Kind {
  kWatch,
  kAdd,
  kSub,
  kMul,
  kMatmul,
  kBroadcastTo,
  kConcat,
  kSumAll,
  kSumAxis,
  kMeanAll,
  kMeanAxis,
  kMaxAxis,
  kRelu,
  kSigmoid,
  kExp,
  kLog,
  kSquare,
  kSqrt,
  kReciprocal,
  kTranspose,
  kSlice,
  kReshape,
};

// Shape of a broadcast binary op with trailing-dimension alignment.
Shape broadcast_shape(const char* op, const Shape& a, const Shape& b) {
  std::size_t ra = a.size(), rb = b.size(), r = std::max(ra, rb);
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t da = i < ra ? a[ra - 1 - i] : 1;
    std::size_t db = i < rb ? b[rb - 1 - i] : 1;
    if (da != db && da != 1 && db != 1)
      fail(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    out[r - 1 - i] = std::max(da, db);
  }
  return out;
}

// Strides of `in` viewed at the (broadcast) rank/extents of `out`;
// broadcast dimensions get stride 0.
std::vector<std::size_t> aligned_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> st(out.size(), 0);
  std::size_t run = 1;
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::size_t d = in[in.size() - 1 - i];
    st[out.size() - 1 - i] = (d == 1) ? 0 : run;
    run *= d;
  }
  // Dimensions beyond in's rank stay 0 (fully broadcast).
  return st;
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

// Elementwise binary with broadcasting. f(a, b) -> out.
template <class F>
std::vector<double> ew_binary(const char* op, const Tensor& a, const Tensor& b,
                              const Shape& out_shape, F f) {
  std::size_t n = shape_size(out_shape);
  std::vector<double> out(n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();

  if (same_shape(a.shape(), b.shape())) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(pa[i], pb[i]);
    return out;
  }
  if (b.size() == 1) {
    double bv = pb[0];
    for (std::size_t i = 0; i < n; ++i) out[i] = f(pa[i], bv);
    return out;
  }
  if (a.size() == 1) {
    double av = pa[0];
    for (std::size_t i = 0; i < n; ++i) out[i] = f(av, pb[i]);
    return out;
  }
  // Tail broadcast: b's shape equals the trailing dims of out and a is full.
  if (same_shape(a.shape(), out_shape) && b.size() != 0 && n % b.size() == 0) {
    std::size_t bs = b.size();
    bool tail = b.rank() <= out_shape.size();
    for (std::size_t i = 0; tail && i < b.rank(); ++i)
      tail = b.shape()[b.rank() - 1 - i] == out_shape[out_shape.size() - 1 - i];
    if (tail) {
      for (std::size_t blk = 0; blk < n / bs; ++blk)
        for (std::size_t i = 0; i < bs; ++i)
          out[blk * bs + i] = f(pa[blk * bs + i], pb[i]);
      return out;
    }
  }
  // Generic strided odometer.
  auto sa = aligned_strides(a.shape(), out_shape);
  auto sb = aligned_strides(b.shape(), out_shape);
  std::size_t r = out_shape.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(pa[ia], pb[ib]);
    for (std::size_t d = r; d-- > 0;) {
      idx[d]++;
      ia += sa[d];
      ib += sb[d];
      if (idx[d] < out_shape[d]) break;
      ia -= sa[d] * out_shape[d];
      ib -= sb[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  return out;
}

// Sum `g` (shaped `from`) down to shape `to` (inverse of broadcasting).
std::vector<double> reduce_to_shape(const std::vector<double>& g, const Shape& from,
                                    const Shape& to) {
  std::size_t nt = shape_size(to);
  if (same_shape(from, to)) return g;
  std::vector<double> out(nt, 0.0);
  if (nt == 1) {
    double s = 0;
    for (double v : g) s += v;
    out[0] = s;
    return out;
  }
  auto st = aligned_strides(to, from);
  std::size_t r = from.size(), n = g.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t it = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[it] += g[i];
    for (std::size_t d = r; d-- > 0;) {
      idx[d]++;
      it += st[d];
      if (idx[d] < from[d]) break;
      it -= st[d] * from[d];
      idx[d] = 0;
    }
  }
  return out;
}

void matmul_nn(const double* a, const double* b, double* o, std::size_t m,
               std::size_t k, std::size_t n) {
  std::fill(o, o + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a + i * k;
    double* orow = o + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double av = ar[p];
      const double* br = b + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * br[j];
    }
  }
}

// o[m,k] = g[m,n] * b[k,n]^T
void matmul_nt(const double* g, const double* b, double* o, std::size_t m,
               std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gr = g + i * n;
    double* orow = o + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* br = b + p * n;
      double s = 0;
      for (std::size_t j = 0; j < n; ++j) s += gr[j] * br[j];
      orow[p] = s;
    }
  }
}

// o[k,n] = a[m,k]^T * g[m,n]
void matmul_tn(const double* a, const double* g, double* o, std::size_t m,
               std::size_t k, std::size_t n) {
  std::fill(o, o + k * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a + i * k;
    const double* gr = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      double av = ar[p];
      double* orow = o + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * gr[j];
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) {
    double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---- Tensor --------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)) {
  check(shape_size(shape_) == data.size(),
        "tensor: data length " + std::to_string(data.size()) +
            " does not match shape " + shape_str(shape_));
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::zeros(Shape shape) {
  std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double v) {
  std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v));
}

double Tensor::item() const {
  check(size() == 1, "item: tensor is not scalar, shape " + shape_str(shape_));
  return (*data_)[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  check(rank() == 2, "at(i,j): tensor is not 2-D");
  return (*data_)[i * shape_[1] + j];
}

Tensor Tensor::detached() const {
  Tensor t;
  t.data_ = data_;
  t.shape_ = shape_;
  return t;
}

// ---- Tape ----------------------------------------------------------------

Tensor Tape::watch(const Tensor& leaf) {
  check(!consumed_, "watch: tape already consumed by backward");
  Tensor t = leaf.detached();
  t.tape_ = this;
  t.requires_grad_ = true;
  t.node_ = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{kWatch, {}, {}, {}, t.shape_});
  return t;
}

const Tensor& GradMap::wrt(const Tensor& t) const {
  auto it = by_node_.find(t.node());
  if (it == by_node_.end())
    throw std::invalid_argument("GradMap: tensor has no gradient (not a watched leaf reachable from the loss)");
  return it->second;
}

bool GradMap::has(const Tensor& t) const { return by_node_.count(t.node()) > 0; }

// Record an op result on the tape of its inputs (if any). `inputs` are the
// tensors whose gradients should flow; `saved` are values the backward rule
// needs (indices into saved are op-specific).
Tensor record_op(const char* name, int kind, const std::vector<Tensor>& inputs,
                 Shape out_shape, std::vector<double> out,
                 std::vector<Tensor> saved, std::vector<std::size_t> iattr) {
  Tape* tape = nullptr;
  for (const Tensor& t : inputs) {
    if (t.tape()) {
      check(!tape || tape == t.tape(),
            std::string(name) + ": inputs belong to different tapes");
      tape = t.tape();
    }
  }
  Tensor r(std::move(out_shape), std::move(out));
  if (!tape) return r;
  check(!tape->consumed_, std::string(name) + ": tape already consumed by backward");
  Tape::Node node;
  node.kind = kind;
  for (const Tensor& t : inputs) node.inputs.push_back(t.tape() ? t.node() : -1);
  node.saved = std::move(saved);
  node.iattr = std::move(iattr);
  node.out_shape = r.shape_;
  r.tape_ = tape;
  r.node_ = static_cast<int>(tape->nodes_.size());
  tape->nodes_.push_back(std::move(node));
  return r;
}

Tensor record_unary(const char* name, int kind, const Tensor& x, Shape out_shape,
                    std::vector<double> out, std::vector<Tensor> saved,
                    std::vector<std::size_t> iattr) {
  return record_op(name, kind, {x}, std::move(out_shape), std::move(out),
                   std::move(saved), std::move(iattr));
}

GradMap Tape::backward(const Tensor& loss) {
  check(loss.tape() == this, "backward: loss is not attached to this tape");
  check(!consumed_, "backward: tape already consumed");
  check(loss.size() == 1, "backward: loss must be scalar, got shape " + shape_str(loss.shape()));
  consumed_ = true;

  std::vector<std::vector<double>> grads(nodes_.size());
  grads[loss.node()] = {1.0};

  auto acc = [&](int node, const std::vector<double>& g, const Shape& from,
                 const Shape& to) {
    if (node < 0) return;
    std::vector<double> gr = reduce_to_shape(g, from, to);
    auto& dst = grads[node];
    if (dst.empty()) {
      dst = std::move(gr);
    } else {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gr[i];
    }
  };
  auto acc_same = [&](int node, std::vector<double>&& g) {
    if (node < 0) return;
    auto& dst = grads[node];
    if (dst.empty()) {
      dst = std::move(g);
    } else {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
    }
  };

  for (std::size_t ni = nodes_.size(); ni-- > 0;) {
    const Node& nd = nodes_[ni];
    const auto& g = grads[ni];
    if (g.empty() || nd.kind == kWatch) continue;
    const Shape& os = nd.out_shape;
    switch (nd.kind) {
      case kAdd: {
        acc(nd.inputs[0], g, os, nd.saved[0].shape());
        acc(nd.inputs[1], g, os, nd.saved[1].shape());
        break;
      }
      case kSub: {
        acc(nd.inputs[0], g, os, nd.saved[0].shape());
        if (nd.inputs[1] >= 0) {
          std::vector<double> ng(g.size());
          for (std::size_t i = 0; i < g.size(); ++i) ng[i] = -g[i];
          acc(nd.inputs[1], ng, os, nd.saved[1].shape());
        }
        break;
      }
      case kMul: {
        const Tensor& a = nd.saved[0];
        const Tensor& b = nd.saved[1];
        if (nd.inputs[0] >= 0) {
          Tensor gt(os, g);
          std::vector<double> gb = ew_binary("mul", gt, b, os, [](double x, double y) { return x * y; });
          acc(nd.inputs[0], gb, os, a.shape());
        }
        if (nd.inputs[1] >= 0) {
          Tensor gt(os, g);
          std::vector<double> ga = ew_binary("mul", gt, a, os, [](double x, double y) { return x * y; });
          acc(nd.inputs[1], ga, os, b.shape());
        }
        break;
      }
      case kMatmul: {
        const Tensor& a = nd.saved[0];
        const Tensor& b = nd.saved[1];
        std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
        if (nd.inputs[0] >= 0) {
          std::vector<double> ga(m * k);
          matmul_nt(g.data(), b.data().data(), ga.data(), m, n, k);
          acc_same(nd.inputs[0], std::move(ga));
        }
        if (nd.inputs[1] >= 0) {
          std::vector<double> gb(k * n);
          matmul_tn(a.data().data(), g.data(), gb.data(), m, k, n);
          acc_same(nd.inputs[1], std::move(gb));
        }
        break;
      }
      case kBroadcastTo: {
        acc(nd.inputs[0], g, os, nd.saved[0].shape());
        break;
      }
      case kConcat: {
        std::size_t axis = nd.iattr[0];
        // outer = product of dims before axis, inner = product after.
        std::size_t outer = 1, inner = 1;
        for (std::size_t d = 0; d < axis; ++d) outer *= os[d];
        for (std::size_t d = axis + 1; d < os.size(); ++d) inner *= os[d];
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < nd.saved.size(); ++pi) {
          const Shape& ps = nd.saved[pi].shape();
          std::size_t ext = ps[axis];
          if (nd.inputs[pi] >= 0) {
            std::vector<double> gp(shape_size(ps));
            for (std::size_t o = 0; o < outer; ++o)
              for (std::size_t e = 0; e < ext; ++e)
                for (std::size_t in = 0; in < inner; ++in)
                  gp[(o * ext + e) * inner + in] =
                      g[(o * os[axis] + off + e) * inner + in];
            acc_same(nd.inputs[pi], std::move(gp));
          }
          off += ext;
        }
        break;
      }
      case kSumAll:
      case kMeanAll: {
        const Shape& is = nd.saved[0].shape();
        double v = g[0];
        if (nd.kind == kMeanAll) v /= static_cast<double>(shape_size(is));
        acc_same(nd.inputs[0], std::vector<double>(shape_size(is), v));
        break;
      }
      case kSumAxis:
      case kMeanAxis: {
        const Shape& is = nd.saved[0].shape();
        std::size_t axis = nd.iattr[0];
        std::size_t outer = 1, inner = 1, ext = is[axis];
        for (std::size_t d = 0; d < axis; ++d) outer *= is[d];
        for (std::size_t d = axis + 1; d < is.size(); ++d) inner *= is[d];
        double sc = nd.kind == kMeanAxis ? 1.0 / static_cast<double>(ext) : 1.0;
        std::vector<double> gi(shape_size(is));
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t e = 0; e < ext; ++e)
            for (std::size_t in = 0; in < inner; ++in)
              gi[(o * ext + e) * inner + in] = g[o * inner + in] * sc;
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kMaxAxis: {
        const Shape& is = nd.saved[0].shape();
        std::size_t axis = nd.iattr[0];
        std::size_t outer = 1, inner = 1, ext = is[axis];
        for (std::size_t d = 0; d < axis; ++d) outer *= is[d];
        for (std::size_t d = axis + 1; d < is.size(); ++d) inner *= is[d];
        std::vector<double> gi(shape_size(is), 0.0);
        // iattr[1..] holds the winning index per output element.
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t in = 0; in < inner; ++in) {
            std::size_t arg = nd.iattr[1 + o * inner + in];
            gi[(o * ext + arg) * inner + in] = g[o * inner + in];
          }
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kRelu: {
        const auto x = nd.saved[0].data();
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] = x[i] > 0 ? g[i] : 0.0;
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kSigmoid: {
        const auto y = nd.saved[0].data();
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] = g[i] * y[i] * (1.0 - y[i]);
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kExp: {
        const auto y = nd.saved[0].data();
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] = g[i] * y[i];
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kLog: {
        const auto x = nd.saved[0].data();
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] = g[i] / x[i];
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kSquare: {
        const auto x = nd.saved[0].data();
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] = 2.0 * x[i] * g[i];
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kSqrt: {
        const auto y = nd.saved[0].data();
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] = g[i] / (2.0 * y[i]);
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kReciprocal: {
        const auto y = nd.saved[0].data();
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) gi[i] = -g[i] * y[i] * y[i];
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kTranspose: {
        std::size_t m = os[0], n = os[1];
        std::vector<double> gi(g.size());
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gi[j * m + i] = g[i * n + j];
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kSlice: {
        const Shape& is = nd.saved[0].shape();
        std::size_t r = is.size();
        std::vector<std::size_t> start(nd.iattr.begin(), nd.iattr.begin() + r);
        std::vector<double> gi(shape_size(is), 0.0);
        std::vector<std::size_t> idx(r, 0);
        // strides of input
        std::vector<std::size_t> st(r, 1);
        for (std::size_t d = r; d-- > 1;) st[d - 1] = st[d] * is[d];
        for (std::size_t i = 0; i < g.size(); ++i) {
          std::size_t off = 0;
          for (std::size_t d = 0; d < r; ++d) off += (start[d] + idx[d]) * st[d];
          gi[off] = g[i];
          for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < os[d]) break;
            idx[d] = 0;
          }
        }
        acc_same(nd.inputs[0], std::move(gi));
        break;
      }
      case kReshape: {
        acc_same(nd.inputs[0], std::vector<double>(g));
        break;
      }
      default:
        throw std::logic_error("backward: unknown op kind");
    }
  }

  GradMap gm;
  for (std::size_t ni = 0; ni < nodes_.size(); ++ni) {
    if (nodes_[ni].kind == kWatch && !grads[ni].empty())
      gm.by_node_.emplace(static_cast<int>(ni), Tensor(nodes_[ni].out_shape, std::move(grads[ni])));
  }
  return gm;
}

// ---- ops -----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  Shape os = broadcast_shape("add", a.shape(), b.shape());
  auto out = ew_binary("add", a, b, os, [](double x, double y) { return x + y; });
  return record_op("add", kAdd, {a, b}, os, std::move(out), {a.detached(), b.detached()}, {});
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Shape os = broadcast_shape("sub", a.shape(), b.shape());
  auto out = ew_binary("sub", a, b, os, [](double x, double y) { return x - y; });
  return record_op("sub", kSub, {a, b}, os, std::move(out), {a.detached(), b.detached()}, {});
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Shape os = broadcast_shape("mul", a.shape(), b.shape());
  auto out = ew_binary("mul", a, b, os, [](double x, double y) { return x * y; });
  return record_op("mul", kMul, {a, b}, os, std::move(out), {a.detached(), b.detached()}, {});
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2,
        "matmul: expects 2-D operands, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  check(a.shape()[1] == b.shape()[0],
        "matmul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n);
  matmul_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return record_op("matmul", kMatmul, {a, b}, {m, n}, std::move(out),
                   {a.detached(), b.detached()}, {});
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
  Shape os = broadcast_shape("broadcast", a.shape(), shape);
  check(os == shape, "broadcast: cannot broadcast " + shape_str(a.shape()) + " to " + shape_str(shape));
  Tensor ones = Tensor::zeros(shape);
  auto out = ew_binary("broadcast", a, ones, os, [](double x, double) { return x; });
  return record_unary("broadcast", kBroadcastTo, a, os, std::move(out), {a.detached()}, {});
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  check(!parts.empty(), "concat: no inputs");
  const Shape& s0 = parts[0].shape();
  check(axis < s0.size(), "concat: axis out of range for shape " + shape_str(s0));
  Shape os = s0;
  std::size_t total = s0[axis];
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Shape& si = parts[i].shape();
    check(si.size() == s0.size(), "concat: rank mismatch " + shape_str(s0) + " vs " + shape_str(si));
    for (std::size_t d = 0; d < s0.size(); ++d)
      if (d != axis)
        check(si[d] == s0[d], "concat: shape mismatch " + shape_str(s0) + " vs " + shape_str(si));
    total += si[axis];
  }
  os[axis] = total;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= os[d];
  for (std::size_t d = axis + 1; d < os.size(); ++d) inner *= os[d];
  std::vector<double> out(shape_size(os));
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    std::size_t ext = p.shape()[axis];
    const double* pd = p.data().data();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t e = 0; e < ext; ++e)
        for (std::size_t in = 0; in < inner; ++in)
          out[(o * total + off + e) * inner + in] = pd[(o * ext + e) * inner + in];
    off += ext;
  }
  std::vector<Tensor> saved;
  for (const Tensor& p : parts) saved.push_back(p.detached());
  return record_op("concat", kConcat, parts, os, std::move(out), std::move(saved), {axis});
}

Tensor sum(const Tensor& a) {
  double s = 0;
  for (double v : a.data()) s += v;
  return record_unary("sum", kSumAll, a, Shape{}, {s}, {a.detached()}, {});
}

Tensor mean(const Tensor& a) {
  check(a.size() > 0, "mean: empty tensor");
  double s = 0;
  for (double v : a.data()) s += v;
  return record_unary("mean", kMeanAll, a, Shape{}, {s / static_cast<double>(a.size())},
                      {a.detached()}, {});
}

namespace {
Tensor reduce_axis(const char* name, int kind, const Tensor& a, std::size_t axis) {
  const Shape& is = a.shape();
  check(axis < is.size(), std::string(name) + ": axis out of range for shape " + shape_str(is));
  Shape os;
  for (std::size_t d = 0; d < is.size(); ++d)
    if (d != axis) os.push_back(is[d]);
  std::size_t outer = 1, inner = 1, ext = is[axis];
  for (std::size_t d = 0; d < axis; ++d) outer *= is[d];
  for (std::size_t d = axis + 1; d < is.size(); ++d) inner *= is[d];
  if (kind == kMeanAxis || kind == kMaxAxis)
    check(ext > 0, std::string(name) + ": reduction over empty axis");
  std::vector<double> out(outer * inner, 0.0);
  std::vector<std::size_t> iattr{axis};
  const double* pd = a.data().data();
  if (kind == kMaxAxis) {
    iattr.resize(1 + outer * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t in = 0; in < inner; ++in) {
        double best = pd[(o * ext + 0) * inner + in];
        std::size_t arg = 0;
        for (std::size_t e = 1; e < ext; ++e) {
          double v = pd[(o * ext + e) * inner + in];
          if (v > best) {  // strict: ties keep the first maximal index
            best = v;
            arg = e;
          }
        }
        out[o * inner + in] = best;
        iattr[1 + o * inner + in] = arg;
      }
  } else {
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t e = 0; e < ext; ++e)
        for (std::size_t in = 0; in < inner; ++in)
          out[o * inner + in] += pd[(o * ext + e) * inner + in];
    if (kind == kMeanAxis)
      for (double& v : out) v /= static_cast<double>(ext);
  }
  return record_unary(name, kind, a, std::move(os), std::move(out), {a.detached()},
                      std::move(iattr));
}
}  // namespace

Tensor sum(const Tensor& a, std::size_t axis) { return reduce_axis("sum", kSumAxis, a, axis); }
Tensor mean(const Tensor& a, std::size_t axis) { return reduce_axis("mean", kMeanAxis, a, axis); }
Tensor max(const Tensor& a, std::size_t axis) { return reduce_axis("max", kMaxAxis, a, axis); }

namespace {
// Elementwise unary that saves its input for the backward rule.
template <class F>
Tensor unary_ew(const char* name, int kind, const Tensor& a, F f) {
  std::vector<double> out(a.size());
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(pd[i]);
  return record_unary(name, kind, a, a.shape(), std::move(out), {a.detached()}, {});
}
}  // namespace

Tensor relu(const Tensor& a) {
  return unary_ew("relu", kRelu, a, [](double x) { return x > 0 ? x : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = stable_sigmoid(pd[i]);
  Tensor saved(a.shape(), out);
  return record_unary("sigmoid", kSigmoid, a, a.shape(), std::move(out), {saved}, {});
}

Tensor exp(const Tensor& a) {
  std::vector<double> out(a.size());
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::exp(pd[i]);
  Tensor saved(a.shape(), out);
  return record_unary("exp", kExp, a, a.shape(), std::move(out), {saved}, {});
}

Tensor log(const Tensor& a) {
  std::vector<double> out(a.size());
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (pd[i] < 0)
      throw std::domain_error("log: negative input " + std::to_string(pd[i]));
    out[i] = std::log(pd[i]);
  }
  return record_unary("log", kLog, a, a.shape(), std::move(out), {a.detached()}, {});
}

Tensor square(const Tensor& a) {
  return unary_ew("square", kSquare, a, [](double x) { return x * x; });
}

Tensor sqrt(const Tensor& a) {
  std::vector<double> out(a.size());
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (pd[i] < 0)
      throw std::domain_error("sqrt: negative input " + std::to_string(pd[i]));
    out[i] = std::sqrt(pd[i]);
  }
  Tensor saved(a.shape(), out);
  return record_unary("sqrt", kSqrt, a, a.shape(), std::move(out), {saved}, {});
}

Tensor reciprocal(const Tensor& a) {
  std::vector<double> out(a.size());
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = 1.0 / pd[i];
  Tensor saved(a.shape(), out);
  return record_unary("reciprocal", kReciprocal, a, a.shape(), std::move(out), {saved}, {});
}

Tensor transpose(const Tensor& a) {
  check(a.rank() == 2, "transpose: expects 2-D, got " + shape_str(a.shape()));
  std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(m * n);
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = pd[i * n + j];
  return record_unary("transpose", kTranspose, a, {n, m}, std::move(out), {a.detached()}, {});
}

Tensor slice(const Tensor& a, const std::vector<std::size_t>& start,
             const std::vector<std::size_t>& extent) {
  const Shape& is = a.shape();
  std::size_t r = is.size();
  check(start.size() == r && extent.size() == r,
        "slice: start/extent rank mismatch for shape " + shape_str(is));
  for (std::size_t d = 0; d < r; ++d)
    check(start[d] + extent[d] <= is[d],
          "slice: out of bounds on axis " + std::to_string(d) + " for shape " + shape_str(is));
  Shape os(extent.begin(), extent.end());
  std::vector<double> out(shape_size(os));
  std::vector<std::size_t> st(r, 1);
  for (std::size_t d = r; d-- > 1;) st[d - 1] = st[d] * is[d];
  std::vector<std::size_t> idx(r, 0);
  const double* pd = a.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) off += (start[d] + idx[d]) * st[d];
    out[i] = pd[off];
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < extent[d]) break;
      idx[d] = 0;
    }
  }
  std::vector<std::size_t> iattr(start);
  return record_unary("slice", kSlice, a, std::move(os), std::move(out), {a.detached()},
                      std::move(iattr));
}

Tensor reshape(const Tensor& a, Shape shape) {
  check(shape_size(shape) == a.size(),
        "reshape: cannot reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
  std::vector<double> out(a.data().begin(), a.data().end());
  return record_unary("reshape", kReshape, a, std::move(shape), std::move(out),
                      {a.detached()}, {});
}

Tensor scale(const Tensor& a, double c) { return mul(a, Tensor::scalar(c)); }
Tensor add_const(const Tensor& a, double c) { return add(a, Tensor::scalar(c)); }
Tensor divide(const Tensor& a, const Tensor& b) { return mul(a, reciprocal(b)); }
Tensor neg(const Tensor& a) { return scale(a, -1.0); }

// ---- grad_check ----------------------------------------------------------

double grad_check(const std::function<Tensor(Tape*, const Tensor&)>& f,
                  const Tensor& x, double step) {
  check(step > 0 && step <= 1e-2, "grad_check: step must lie in (0, 1e-2]");
  Tape tape;
  Tensor xw = tape.watch(x);
  Tensor loss = f(&tape, xw);
  check(loss.size() == 1, "grad_check: f must return a scalar");
  GradMap gm = tape.backward(loss);
  std::vector<double> analytic(x.size(), 0.0);
  if (gm.has(xw)) {
    const Tensor& g = gm.wrt(xw);
    analytic.assign(g.data().begin(), g.data().end());
  }
  double worst = 0.0;
  std::vector<double> base(x.data().begin(), x.data().end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> up = base, dn = base;
    up[i] += step;
    dn[i] -= step;
    double fu = f(nullptr, Tensor(x.shape(), up)).item();
    double fd = f(nullptr, Tensor(x.shape(), dn)).item();
    double cd = (fu - fd) / (2.0 * step);
    double err = std::abs(analytic[i] - cd) / (std::abs(analytic[i]) + std::abs(cd) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace wgo::num
