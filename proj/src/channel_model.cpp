#include "risisac/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace risisac {

using std::numbers::pi;

double raised_cosine(double t, double symbol_period, double rolloff, double span) {
  const double x = t / symbol_period;
  if (std::abs(x) > span) return 0.0;
  if (x == 0.0) return 1.0;
  const double sinc = std::sin(pi * x) / (pi * x);
  const double denom = 1.0 - (2.0 * rolloff * x) * (2.0 * rolloff * x);
  if (rolloff > 0.0 && std::abs(denom) < 1e-12) {
    const double h = 1.0 / (2.0 * rolloff);
    return (pi / 4.0) * std::sin(pi * h) / (pi * h);
  }
  return sinc * std::cos(pi * rolloff * x) / denom;
}

CVec steering_vector(double azimuth, double elevation, const UpaShape& upa) {
  const int n = upa.size();
  if (n < 1) throw DimensionError("UPA shape must have at least one element");
  CVec a(n);
  const double u = std::sin(azimuth) * std::cos(elevation);
  const double v = std::sin(elevation);
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  for (int mv = 0; mv < upa.vertical; ++mv)
    for (int mh = 0; mh < upa.horizontal; ++mh)
      a[mv * upa.horizontal + mh] = std::polar(norm, pi * (mh * u + mv * v));
  return a;
}

CVec gen_geometric_channel(const ClusterParams& params, int M, const UpaShape& upa,
                           int sample_index, double sample_period) {
  if (M < 1 || M != upa.size()) {
    std::ostringstream msg;
    msg << "antenna count M=" << M << " is not expressible as the configured UPA "
        << upa.horizontal << "x" << upa.vertical;
    throw DimensionError(msg.str());
  }
  if (params.clusters.empty()) throw std::invalid_argument("cluster list must be nonempty");
  if (!(params.pathloss > 0.0)) throw std::invalid_argument("pathloss must be positive");

  const double t = sample_index * sample_period;
  CVec h = CVec::Zero(M);
  for (const auto& c : params.clusters) {
    if (c.delay < 0.0) throw std::invalid_argument("cluster delay must be non-negative");
    const double p = params.pulse ? params.pulse(t - c.delay) : raised_cosine(t - c.delay, sample_period);
    if (p == 0.0) continue;
    h += (c.gain * p) * steering_vector(c.azimuth, c.elevation, upa);
  }
  return std::sqrt(M / params.pathloss) * h;
}

ClusterParams draw_clusters(int count, Rng& rng, double max_delay, double pathloss) {
  if (count < 1) throw std::invalid_argument("cluster count must be >= 1");
  std::uniform_real_distribution<double> az(-pi, pi);
  std::uniform_real_distribution<double> el(-pi / 2, pi / 2);
  std::uniform_real_distribution<double> tau(0.0, max_delay);
  ClusterParams params;
  params.pathloss = pathloss;
  params.clusters.resize(static_cast<std::size_t>(count));
  for (auto& c : params.clusters) {
    c.gain = complex_normal(rng);
    c.azimuth = az(rng);
    c.elevation = el(rng);
    c.delay = max_delay > 0.0 ? tau(rng) : 0.0;
  }
  return params;
}

int count_nonzero(const CVec& v, double threshold) {
  return static_cast<int>((v.array().abs() > threshold).count());
}

namespace {

CVec sparse_vector(Eigen::Index n, int k, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Partial Fisher-Yates: the first k entries form a uniform k-subset.
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  CVec v = CVec::Zero(n);
  for (int i = 0; i < k; ++i) {
    cplx x;
    do x = complex_normal(rng);
    while (std::abs(x) <= 1e-12);
    v[idx[static_cast<std::size_t>(i)]] = x;
  }
  return v;
}

}  // namespace

ChannelPair gen_sparse_isac_channels(int L, int M, int k_s, int k_c, std::uint64_t seed) {
  if (L < 1 || M < 1) throw std::invalid_argument("L and M must be >= 1");
  const Eigen::Index n = static_cast<Eigen::Index>(L + 1) * M;
  if (k_s < 0 || k_c < 0 || k_s > n || k_c > n) {
    std::ostringstream msg;
    msg << "sparsity (" << k_s << ", " << k_c << ") exceeds channel dimension " << n;
    throw std::invalid_argument(msg.str());
  }
  Rng rng(seed);
  ChannelPair ch;
  ch.L = L;
  ch.M = M;
  ch.g_s = sparse_vector(n, k_s, rng);
  ch.g_c = sparse_vector(n, k_c, rng);
  ch.sparsity_s = k_s;
  ch.sparsity_c = k_c;
  return ch;
}

namespace {

// L x M link drawn as a sum of clusters of rank-one RIS x BS responses.
CMat geometric_link(int L, int M, const UpaShape& bs, const UpaShape& ris, int clusters, Rng& rng) {
  std::uniform_real_distribution<double> az(-pi, pi);
  std::uniform_real_distribution<double> el(-pi / 2, pi / 2);
  CMat G = CMat::Zero(L, M);
  for (int c = 0; c < clusters; ++c) {
    const cplx gain = complex_normal(rng);
    const CVec a_ris = steering_vector(az(rng), el(rng), ris);
    const CVec a_bs = steering_vector(az(rng), el(rng), bs);
    G += gain * a_ris * a_bs.transpose();
  }
  return std::sqrt(static_cast<double>(L) * M) * G;
}

CVec vec_augmented(const CVec& direct, const CVec& ris_user, const CMat& link) {
  const Eigen::Index L = link.rows();
  const Eigen::Index M = link.cols();
  CMat G(L + 1, M);
  G.row(0) = direct.adjoint();
  G.bottomRows(L) = ris_user.asDiagonal() * link;
  return Eigen::Map<const CVec>(G.data(), G.size());
}

}  // namespace

ChannelPair gen_geometric_isac_channels(int L, int M, const UpaShape& bs_upa, const UpaShape& ris_upa,
                                        int clusters, std::uint64_t seed) {
  if (ris_upa.size() != L)
    throw DimensionError("RIS UPA shape does not match the element count L");
  Rng rng(seed);
  const auto draw = [&](int n, const UpaShape& upa) {
    return gen_geometric_channel(draw_clusters(clusters, rng), n, upa, 0, 1.0);
  };
  const CVec d = draw(M, bs_upa);
  const CVec f = draw(M, bs_upa);
  const CVec w = draw(L, ris_upa);
  const CMat A = geometric_link(L, M, bs_upa, ris_upa, clusters, rng);
  const CMat H = geometric_link(L, M, bs_upa, ris_upa, clusters, rng);

  ChannelPair ch;
  ch.L = L;
  ch.M = M;
  ch.g_s = vec_augmented(d, w, A);
  ch.g_c = vec_augmented(f, w, H);
  ch.sparsity_s = count_nonzero(ch.g_s);
  ch.sparsity_c = count_nonzero(ch.g_c);
  return ch;
}

CMat qpsk_pilots(int blocks, int M, Rng& rng) {
  std::uniform_int_distribution<int> quadrant(0, 3);
  CMat P(blocks, M);
  for (int b = 0; b < blocks; ++b)
    for (int m = 0; m < M; ++m) P(b, m) = std::polar(1.0, pi / 4.0 + pi / 2.0 * quadrant(rng));
  return P;
}

MeasurementSet synth_observation(const ChannelPair& channels, const GroupingMap& grouping,
                                 const CMat& sensing_pilots, const CMat& comm_pilots, double snr_db,
                                 std::uint64_t seed) {
  const int M = static_cast<int>(sensing_pilots.cols());
  MeasurementSet ms;
  ms.grouping = grouping;
  ms.sensing_pilots = sensing_pilots;
  ms.comm_pilots = comm_pilots;
  ms.blocks = static_cast<int>(sensing_pilots.rows());
  auto ops = build_measurement_operators(grouping, sensing_pilots, comm_pilots, M);
  ms.S = std::move(ops.S);
  ms.C = std::move(ops.C);
  ms.s_op = KroneckerOperator(grouping, sensing_pilots);
  ms.c_op = KroneckerOperator(grouping, comm_pilots);
  if (channels.g_s.size() != ms.S.cols() || channels.g_c.size() != ms.C.cols()) {
    std::ostringstream msg;
    msg << "channel length " << channels.g_s.size() << "/" << channels.g_c.size()
        << " does not match operator width " << ms.S.cols();
    throw DimensionError(msg.str());
  }

  ms.r = ms.s_op.apply(channels.g_s) + ms.c_op.apply(channels.g_c);
  if (std::isinf(snr_db) && snr_db > 0) {
    ms.snr_linear = kNoiseless;
    ms.gamma_e = kNoiseless;
    return ms;
  }
  ms.snr_linear = std::pow(10.0, snr_db / 10.0);
  ms.gamma_e = grouping.groups() * ms.snr_linear;
  Rng rng(seed);
  ms.r += complex_normal_vector(rng, ms.r.size(), 1.0 / ms.gamma_e);
  return ms;
}

}  // namespace risisac
