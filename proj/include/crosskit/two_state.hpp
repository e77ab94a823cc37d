#pragma once

#include <vector>

#include "crosskit/greens_core.hpp"
#include "crosskit/types.hpp"

namespace crosskit {

struct DeltaCoupling {
  double strength = 0.0;  // K0 in V12 = K0 delta(x - location)
  double location = 0.0;
};

struct TwoChannelSystem {
  PotentialSpec channel1;
  PotentialSpec channel2;
  DeltaCoupling coupling;
  GreenConvention convention = GreenConvention::Retarded;
  double numeric_step = 0.01;  // grid step for sampled channels
};

enum class GreenBlock { G11, G12, G21, G22 };

// 1 - K0^2 G1(xc, xc) G2(xc, xc); zeros are the dressed poles
Complex denominator(EnergyPoint omega, const TwoChannelSystem& sys);

// Blocks of the coupled Green's function in closed form
Complex dressed_green(GreenBlock block, double x, double x0, EnergyPoint omega,
                      const TwoChannelSystem& sys);

// Scattering off the crossing for a wave incident from the left in channel 1
// at energy E; requires constant channels and an open entrance
ScatterResult scatter_two(double E, const TwoChannelSystem& sys);

struct PoleCandidate {
  Complex omega;
  double abs_denominator = 0.0;
  Complex residue;         // of 1/D, estimated as 1/D'
  bool converged = false;  // Newton reached |D| <= 1e-10
};

struct ScanRegion {
  double re_min, re_max;
  double im_min, im_max;
};

// Grid minima of |D| refined by complex Newton iteration; unconverged
// candidates are reported with converged = false
std::vector<PoleCandidate> resonance_scan(const ScanRegion& region,
                                          const TwoChannelSystem& sys,
                                          int grid_re = 64, int grid_im = 32);

}  // namespace crosskit
