#include "pairlearn/net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pairlearn/rng.hpp"

namespace pairlearn {

using nlohmann::json;

AntisymNet AntisymNet::init(int d, const std::vector<int>& widths, double eta, double sparsity,
                            uint64_t seed) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (eta <= 0.0) throw std::invalid_argument("eta must be positive");
  if (sparsity < 0.0 || sparsity > 1.0) throw std::invalid_argument("sparsity must be in [0,1]");
  if (widths.size() < 2 || widths.front() != 2 * d || widths.back() != 1)
    throw std::invalid_argument("widths must be [2d, ..., 1]");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("layer width must be >= 1");

  AntisymNet net;
  net.d = d;
  net.widths = widths;
  net.eta = eta;
  net.seed = seed;
  SeqRng rng(seed, 21);
  int L = static_cast<int>(widths.size()) - 1;
  net.layers.resize(L);
  for (int l = 0; l < L; ++l) {
    NetLayer& lay = net.layers[l];
    lay.rows = widths[l + 1];
    lay.cols = widths[l];
    lay.w.resize(static_cast<std::size_t>(lay.rows) * lay.cols);
    lay.wmask.resize(lay.w.size());
    lay.b.resize(lay.rows);
    lay.bmask.resize(lay.rows);
    double scale = std::sqrt(2.0 / lay.cols);
    for (std::size_t k = 0; k < lay.w.size(); ++k) {
      bool keep = rng.uniform() >= sparsity;
      lay.wmask[k] = keep ? 1 : 0;
      lay.w[k] = keep ? scale * rng.normal() : 0.0;
    }
    for (int i = 0; i < lay.rows; ++i) {
      bool keep = rng.uniform() >= sparsity;
      lay.bmask[i] = keep ? 1 : 0;
      lay.b[i] = keep ? rng.uniform(-0.1, 0.1) : 0.0;
      // first layer sees raw inputs on [0,1]^2d; center each pre-activation at
      // the cube midpoint so no unit starts dead on the whole input range
      if (l == 0 && keep) {
        double wsum = 0.0;
        for (int j = 0; j < lay.cols; ++j) wsum += lay.w[static_cast<std::size_t>(i) * lay.cols + j];
        lay.b[i] -= 0.5 * wsum;
      }
    }
  }
  return net;
}

AntisymNet AntisymNet::sized(int d, int L, long long weight_budget, long long unit_budget,
                             double eta, uint64_t seed) {
  if (L < 1) throw std::invalid_argument("sized net needs depth >= 1");
  if (L == 1) {  // a single affine map: no hidden units to budget
    if (weight_budget < 2LL * d + 1) throw std::invalid_argument("budget too small for depth");
    return init(d, {2 * d, 1}, eta, 0.0, seed);
  }
  auto dense_count = [&](long long w) {
    long long c = w * 2 * d + w;                    // first hidden layer
    c += static_cast<long long>(L - 2) * (w * w + w);  // remaining hidden layers
    c += w + 1;                                     // output row + bias
    return c;
  };
  long long best = 0;
  for (long long w = 1;; ++w) {
    if (dense_count(w) > weight_budget || static_cast<long long>(L - 1) * w > unit_budget) break;
    best = w;
  }
  if (best == 0) throw std::invalid_argument("budget too small for depth");
  std::vector<int> widths(L + 1, static_cast<int>(best));
  widths.front() = 2 * d;
  widths.back() = 1;
  return init(d, widths, eta, 0.0, seed);
}

void AntisymNet::prepare(NetWorkspace& ws) const {
  std::size_t atotal = 0;
  int maxw = 1;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    atotal += widths[l];
    maxw = std::max(maxw, widths[l]);
  }
  maxw = std::max(maxw, widths.back());
  ws.a1.assign(atotal, 0.0);
  ws.a2.assign(atotal, 0.0);
  ws.d1.assign(maxw, 0.0);
  ws.d2.assign(maxw, 0.0);
  ws.xt.assign(2 * static_cast<std::size_t>(d), 0.0);
  int L = depth();
  ws.aoff.resize(L);
  ws.goff.resize(L);
  std::size_t ao = 0, go = 0;
  for (int l = 0; l < L; ++l) {
    ws.aoff[l] = ao;
    ws.goff[l] = go;
    ao += widths[l];
    go += layers[l].w.size() + layers[l].b.size();
  }
}

double AntisymNet::inner_forward(const double* xt, NetWorkspace& ws, int pass) const {
  std::vector<double>& a = pass == 0 ? ws.a1 : ws.a2;
  int L = depth();
  std::size_t off = 0;
  for (int j = 0; j < widths[0]; ++j) a[j] = xt[j];
  const double* cur = a.data();
  std::size_t noff = 0;
  for (int l = 0; l < L - 1; ++l) {
    const NetLayer& lay = layers[l];
    noff = off + lay.cols;
    double* nxt = a.data() + noff;
    const double* w = lay.w.data();
    for (int i = 0; i < lay.rows; ++i) {
      double z = lay.b[i];
      for (int j = 0; j < lay.cols; ++j) z += w[static_cast<std::size_t>(i) * lay.cols + j] * cur[j];
      nxt[i] = z > 0.0 ? z : 0.0;
    }
    cur = nxt;
    off = noff;
  }
  const NetLayer& out = layers[L - 1];
  double h = out.b[0];
  for (int j = 0; j < out.cols; ++j) h += out.w[j] * cur[j];
  return h;
}

void AntisymNet::check_input(std::size_t nx, std::size_t nxp) const {
  if (static_cast<int>(nx) != d || static_cast<int>(nxp) != d)
    throw std::invalid_argument("input dimension mismatch");
}

double AntisymNet::forward_ws(const double* x, const double* xp, NetWorkspace& ws) const {
  for (int j = 0; j < d; ++j) {
    ws.xt[j] = x[j];
    ws.xt[d + j] = xp[j];
  }
  double h1 = inner_forward(ws.xt.data(), ws, 0);
  for (int j = 0; j < d; ++j) {
    ws.xt[j] = xp[j];
    ws.xt[d + j] = x[j];
  }
  double h2 = inner_forward(ws.xt.data(), ws, 1);
  return project_eta(h1, eta) - project_eta(h2, eta);
}

double AntisymNet::forward(std::span<const double> x, std::span<const double> xp) const {
  check_input(x.size(), xp.size());
  NetWorkspace ws;
  prepare(ws);
  return forward_ws(x.data(), xp.data(), ws);
}

std::size_t AntisymNet::param_count() const {
  std::size_t n = 0;
  for (const auto& lay : layers) n += lay.w.size() + lay.b.size();
  return n;
}

void AntisymNet::flatten(double* out) const {
  std::size_t k = 0;
  for (const auto& lay : layers) {
    for (double v : lay.w) out[k++] = v;
    for (double v : lay.b) out[k++] = v;
  }
}

void AntisymNet::load(const double* params) {
  std::size_t k = 0;
  for (auto& lay : layers) {
    for (double& v : lay.w) v = params[k++];
    for (double& v : lay.b) v = params[k++];
  }
}

void AntisymNet::zero_masked(double* grad) const {
  std::size_t k = 0;
  for (const auto& lay : layers) {
    for (std::size_t i = 0; i < lay.w.size(); ++i, ++k)
      if (!lay.wmask[i]) grad[k] = 0.0;
    for (std::size_t i = 0; i < lay.b.size(); ++i, ++k)
      if (!lay.bmask[i]) grad[k] = 0.0;
  }
}

namespace {
// backprop one inner pass: activations in a (flat), scale c on dh
void backprop_pass(const AntisymNet& net, const NetWorkspace& ws, const std::vector<double>& a,
                   double c, std::vector<double>& dcur, std::vector<double>& dnxt, double* grad) {
  int L = net.depth();
  const auto& offs = ws.aoff;
  const auto& goffs = ws.goff;

  const NetLayer& out = net.layers[L - 1];
  const double* ain = a.data() + offs[L - 1];
  double* g = grad + goffs[L - 1];
  for (int j = 0; j < out.cols; ++j) {
    g[j] += c * ain[j];
    dcur[j] = c * out.w[j];
  }
  g[out.cols] += c;  // output bias

  for (int l = L - 2; l >= 0; --l) {
    const NetLayer& lay = net.layers[l];
    const double* alow = a.data() + offs[l];
    const double* ahigh = a.data() + offs[l + 1];
    double* gl = grad + goffs[l];
    double* gb = gl + lay.w.size();
    for (int j = 0; j < lay.cols; ++j) dnxt[j] = 0.0;
    for (int i = 0; i < lay.rows; ++i) {
      if (!(ahigh[i] > 0.0)) continue;  // ReLU subgradient at 0 is 0
      double di = dcur[i];
      if (di == 0.0) continue;
      const double* wrow = lay.w.data() + static_cast<std::size_t>(i) * lay.cols;
      double* grow = gl + static_cast<std::size_t>(i) * lay.cols;
      for (int j = 0; j < lay.cols; ++j) {
        grow[j] += di * alow[j];
        dnxt[j] += di * wrow[j];
      }
      gb[i] += di;
    }
    std::swap(dcur, dnxt);
  }
}
}  // namespace

double AntisymNet::pair_loss_grad(const double* x, const double* xp, double y, double yp,
                                  const PairwiseLoss& loss, double weight, NetWorkspace& ws,
                                  double* grad) const {
  for (int j = 0; j < d; ++j) {
    ws.xt[j] = x[j];
    ws.xt[d + j] = xp[j];
  }
  double h1 = inner_forward(ws.xt.data(), ws, 0);
  for (int j = 0; j < d; ++j) {
    ws.xt[j] = xp[j];
    ws.xt[d + j] = x[j];
  }
  double h2 = inner_forward(ws.xt.data(), ws, 1);
  double t = project_eta(h1, eta) - project_eta(h2, eta);
  double lv = loss(t, y, yp);
  if (grad) {
    double dt = loss.dt(t, y, yp) * weight;
    double c1 = dt * project_eta_grad(h1, eta);
    double c2 = -dt * project_eta_grad(h2, eta);
    if (c1 != 0.0) backprop_pass(*this, ws, ws.a1, c1, ws.d1, ws.d2, grad);
    if (c2 != 0.0) backprop_pass(*this, ws, ws.a2, c2, ws.d1, ws.d2, grad);
  }
  return lv;
}

double AntisymNet::min_kink_margin(const double* x, const double* xp, NetWorkspace& ws) const {
  double margin = std::numeric_limits<double>::infinity();
  int L = depth();
  for (int pass = 0; pass < 2; ++pass) {
    const double* lead = pass == 0 ? x : xp;
    const double* trail = pass == 0 ? xp : x;
    for (int j = 0; j < d; ++j) {
      ws.xt[j] = lead[j];
      ws.xt[d + j] = trail[j];
    }
    std::vector<double>& cur = ws.d1;  // max-width scratch, unused outside backprop
    std::vector<double>& nxt = ws.d2;
    for (int j = 0; j < widths[0]; ++j) cur[j] = ws.xt[j];
    for (int l = 0; l < L - 1; ++l) {
      const NetLayer& lay = layers[l];
      for (int i = 0; i < lay.rows; ++i) {
        double z = lay.b[i];
        for (int j = 0; j < lay.cols; ++j)
          z += lay.w[static_cast<std::size_t>(i) * lay.cols + j] * cur[j];
        margin = std::min(margin, std::abs(z));
        nxt[i] = z > 0.0 ? z : 0.0;
      }
      std::swap(cur, nxt);
    }
    const NetLayer& out = layers[L - 1];
    double h = out.b[0];
    for (int j = 0; j < out.cols; ++j) h += out.w[j] * cur[j];
    margin = std::min(margin, std::abs(std::abs(h) - eta / 2.0));
  }
  return margin;
}

NetComplexity AntisymNet::inner_complexity() const {
  NetComplexity c;
  c.depth = depth();
  for (int l = 0; l < depth(); ++l) {
    const NetLayer& lay = layers[l];
    for (double v : lay.w) c.nonzero_weights += v != 0.0;
    if (l + 1 < depth()) {
      for (double v : lay.b) c.nonzero_weights += v != 0.0;
      c.units += lay.rows;
    } else {
      c.nonzero_weights += 1;  // output bias is counted unconditionally
    }
  }
  return c;
}

NetComplexity AntisymNet::complexity() const {
  NetComplexity inner = inner_complexity();
  NetComplexity c;
  c.depth = inner.depth + kHeadDepthOverhead;
  c.nonzero_weights = 2 * inner.nonzero_weights + kHeadWeightOverhead;
  c.units = 2 * inner.units + kHeadUnitOverhead;
  return c;
}

// --- serialization ---------------------------------------------------------

namespace {
const char* kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string mask_to_b64(const std::vector<uint8_t>& bits) {
  std::vector<uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) bytes[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  std::string out;
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    uint32_t v = bytes[i] << 16;
    int have = 1;
    if (i + 1 < bytes.size()) { v |= bytes[i + 1] << 8; ++have; }
    if (i + 2 < bytes.size()) { v |= bytes[i + 2]; ++have; }
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += have > 1 ? kB64[(v >> 6) & 63] : '=';
    out += have > 2 ? kB64[v & 63] : '=';
  }
  return out;
}

std::vector<uint8_t> b64_to_mask(const std::string& s, std::size_t nbits) {
  auto decode = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<uint8_t> bytes;
  uint32_t v = 0;
  int have = 0;
  for (char c : s) {
    int x = decode(c);
    if (x < 0) continue;
    v = (v << 6) | static_cast<uint32_t>(x);
    if (++have == 4) {
      bytes.push_back(static_cast<uint8_t>((v >> 16) & 255));
      bytes.push_back(static_cast<uint8_t>((v >> 8) & 255));
      bytes.push_back(static_cast<uint8_t>(v & 255));
      v = 0;
      have = 0;
    }
  }
  if (have == 3) {
    v <<= 6;
    bytes.push_back(static_cast<uint8_t>((v >> 16) & 255));
    bytes.push_back(static_cast<uint8_t>((v >> 8) & 255));
  } else if (have == 2) {
    v <<= 12;
    bytes.push_back(static_cast<uint8_t>((v >> 16) & 255));
  }
  std::vector<uint8_t> bits(nbits, 0);
  for (std::size_t i = 0; i < nbits; ++i)
    bits[i] = (i / 8 < bytes.size() && (bytes[i / 8] >> (i % 8)) & 1) ? 1 : 0;
  return bits;
}
}  // namespace

std::string AntisymNet::to_json() const {
  json j;
  j["widths"] = widths;
  j["eta"] = eta;
  j["seed"] = seed;
  json weights = json::array();
  json masks = json::array();
  for (const auto& lay : layers) {
    weights.push_back(lay.w);
    weights.push_back(lay.b);
    masks.push_back(mask_to_b64(lay.wmask));
    masks.push_back(mask_to_b64(lay.bmask));
  }
  j["weights"] = weights;
  j["masks"] = masks;
  return j.dump(2);
}

AntisymNet AntisymNet::from_json(const std::string& text) {
  json j = json::parse(text);
  AntisymNet net;
  net.widths = j.at("widths").get<std::vector<int>>();
  net.eta = j.at("eta").get<double>();
  net.seed = j.at("seed").get<uint64_t>();
  if (net.widths.size() < 2 || net.widths.front() % 2 != 0 || net.widths.back() != 1)
    throw std::invalid_argument("malformed widths");
  net.d = net.widths.front() / 2;
  int L = static_cast<int>(net.widths.size()) - 1;
  const json& weights = j.at("weights");
  const json& masks = j.at("masks");
  if (weights.size() != static_cast<std::size_t>(2 * L) || masks.size() != weights.size())
    throw std::invalid_argument("weights/masks arity mismatch");
  net.layers.resize(L);
  for (int l = 0; l < L; ++l) {
    NetLayer& lay = net.layers[l];
    lay.rows = net.widths[l + 1];
    lay.cols = net.widths[l];
    lay.w = weights[2 * l].get<std::vector<double>>();
    lay.b = weights[2 * l + 1].get<std::vector<double>>();
    if (lay.w.size() != static_cast<std::size_t>(lay.rows) * lay.cols ||
        lay.b.size() != static_cast<std::size_t>(lay.rows))
      throw std::invalid_argument("layer size mismatch");
    lay.wmask = b64_to_mask(masks[2 * l].get<std::string>(), lay.w.size());
    lay.bmask = b64_to_mask(masks[2 * l + 1].get<std::string>(), lay.b.size());
  }
  if (net.eta <= 0.0) throw std::invalid_argument("eta must be positive");
  return net;
}

void AntisymNet::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << to_json() << "\n";
}

AntisymNet AntisymNet::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

PairPredictor AntisymNet::as_predictor() const {
  AntisymNet copy = *this;
  return [copy](std::span<const double> x, std::span<const double> xp) {
    return copy.forward(x, xp);
  };
}

}  // namespace pairlearn
