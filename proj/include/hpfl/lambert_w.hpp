#pragma once

namespace hpfl {

// Real branches of the Lambert W function, solving w e^w = z.
// Principal branch: z >= -1/e, w >= -1.
double lambert_w0(double z);
// Lower branch: -1/e <= z < 0, w <= -1.
double lambert_wm1(double z);

}  // namespace hpfl
