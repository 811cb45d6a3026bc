#pragma once

namespace blowctl {

/// Smooth compactly supported plateau function: exactly 1 for |xi| <= 1,
/// exactly 0 for |xi| >= 2, and a C-infinity monotone partition-of-unity
/// blend g(2-|xi|) / (g(2-|xi|) + g(|xi|-1)) with g(r) = exp(-1/r) in between.
double cutoff_chi0(double xi);

}  // namespace blowctl
