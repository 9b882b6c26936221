#include "core/flow_state.hpp"

#include <algorithm>
#include <cmath>

#include "core/determinant.hpp"
#include "core/errors.hpp"

namespace patchflow {

void validate(const TimeIntegratorConfig& cfg) {
  require(std::isfinite(cfg.dt) && cfg.dt != 0.0, "dt must be a nonzero finite number");
  if (cfg.scheme == Scheme::picard) {
    require(cfg.picard_iterations >= 1, "picard_iterations must be >= 1");
    require(cfg.picard_nodes >= 2 && cfg.picard_nodes <= 12, "picard_nodes must be in [2, 12]");
  }
}

FlowState FlowState::initial(std::shared_ptr<const ParticleGeometry> geom, const std::vector<double>& tracers) {
  require(geom != nullptr, "flow state needs a geometry");
  const int n = geom->n;
  require(tracers.size() % n == 0, "tracer array is not a multiple of n");
  FlowState s;
  s.geom = std::move(geom);
  s.X = s.geom->alpha;
  const std::size_t count = s.geom->count();
  s.DX.assign(count * n * n, 0.0);
  for (std::size_t p = 0; p < count; ++p)
    for (int i = 0; i < n; ++i) s.DX[p * n * n + i * n + i] = 1.0;
  s.det.assign(count, 1.0);
  s.tracer_alpha = tracers;
  s.tracer_X = tracers;
  return s;
}

void FlowState::refresh_det() {
  const int nn = n();
  for (std::size_t p = 0; p < count(); ++p) {
    det[p] = det_small(&DX[p * nn * nn], nn);
    if (!(det[p] > 0.0)) throw OrientationLost(p, t, det[p]);
  }
}

double FlowState::det_consistency() const {
  const int nn = n();
  double worst = 0.0;
  for (std::size_t p = 0; p < count(); ++p)
    worst = std::max(worst, std::abs(det_small(&DX[p * nn * nn], nn) - det[p]));
  return worst;
}

}  // namespace patchflow
