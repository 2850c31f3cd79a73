#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "risisac/grouping.hpp"
#include "risisac/measurement_operator.hpp"
#include "risisac/types.hpp"

namespace risisac {

/// Raised-cosine pulse with p(0) = 1, zero beyond +-span symbol periods.
double raised_cosine(double t, double symbol_period, double rolloff = 0.3, double span = 4.0);

struct UpaShape {
  int horizontal = 1;
  int vertical = 1;
  int size() const { return horizontal * vertical; }
};

/// Half-wavelength UPA response, normalized to unit l2 norm.
CVec steering_vector(double azimuth, double elevation, const UpaShape& upa);

struct Cluster {
  cplx gain{1.0, 0.0};
  double azimuth = 0.0;    // [-pi, pi)
  double elevation = 0.0;  // [-pi/2, pi/2]
  double delay = 0.0;      // seconds, >= 0
};

struct ClusterParams {
  std::vector<Cluster> clusters;
  double pathloss = 1.0;
  std::function<double(double)> pulse;  // empty -> raised cosine at the sample period
};

/// sqrt(M / pathloss) * sum_l gain_l p(d T_s - delay_l) a(azimuth_l, elevation_l).
/// Rejects M that does not equal the UPA's horizontal x vertical size.
CVec gen_geometric_channel(const ClusterParams& params, int M, const UpaShape& upa,
                           int sample_index, double sample_period);

/// Random clusters: CN(0,1) gains, uniform angles, delays uniform in [0, max_delay].
ClusterParams draw_clusters(int count, Rng& rng, double max_delay = 0.0, double pathloss = 1.0);

/// Augmented sensing and communication channels vec([d^H; diag(w)A]) and
/// vec([f^H; diag(w)H]), each of length (L+1)*M.
struct ChannelPair {
  int L = 0;
  int M = 0;
  CVec g_s;
  CVec g_c;
  int sparsity_s = 0;
  int sparsity_c = 0;
};

int count_nonzero(const CVec& v, double threshold = 1e-12);

ChannelPair gen_sparse_isac_channels(int L, int M, int k_s, int k_c, std::uint64_t seed);

/// Every constituent link (d, f, w, A, H) drawn from the geometric model.
ChannelPair gen_geometric_isac_channels(int L, int M, const UpaShape& bs_upa, const UpaShape& ris_upa,
                                        int clusters, std::uint64_t seed);

/// Unit-modulus QPSK symbols, B x M.
CMat qpsk_pilots(int blocks, int M, Rng& rng);

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct MeasurementSet {
  CVec r;
  CMat S;
  CMat C;
  KroneckerOperator s_op;
  KroneckerOperator c_op;
  GroupingMap grouping;
  double snr_linear = 0.0;
  double gamma_e = 0.0;  // groups * snr_linear; infinite when noiseless
  int blocks = 0;
  CMat sensing_pilots;  // B x M
  CMat comm_pilots;     // B x M

  bool noiseless() const { return !std::isfinite(gamma_e); }
  /// Per-entry variance of the despread noise, 0 when noiseless.
  double noise_variance() const { return noiseless() ? 0.0 : 1.0 / gamma_e; }
};

/// r = S g_s + C g_c + e with e ~ CN(0, gamma_e^{-1} I). Pass kNoiseless for
/// `snr_db` to disable the noise.
MeasurementSet synth_observation(const ChannelPair& channels, const GroupingMap& grouping,
                                 const CMat& sensing_pilots, const CMat& comm_pilots, double snr_db,
                                 std::uint64_t seed);

}  // namespace risisac
