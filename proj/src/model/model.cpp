#include "anav/model.hpp"

#include <stdexcept>

namespace anav {

Model Model::create(const ModelDims& dims, std::uint64_t seed) {
  if (dims.landmark_dim < 2 || dims.hidden < 1) throw std::invalid_argument("Model: invalid dims");
  const int h = dims.hidden;
  const int dv = dims.view_dim();
  Model m;
  m.dims = dims;
  auto& p = m.params;
  m.id.enc_w = p.add("enc.w", 4 * h, dims.landmark_dim + h);
  m.id.enc_b = p.add("enc.b", 4 * h, 1);
  m.id.nav_w = p.add("nav.w", 4 * h, h + 2 * dv + h);
  m.id.nav_b = p.add("nav.b", 4 * h, 1);
  m.id.ep_w = p.add("ep.w", 4 * h, h + 2 * dv + h);
  m.id.ep_b = p.add("ep.b", 4 * h, 1);
  m.id.kw_w = p.add("kw.w", 4 * h, dv + h);
  m.id.kw_b = p.add("kw.b", 4 * h, 1);
  m.id.att_instr = p.add("W_att_instr", h, h);
  m.id.att_pano = p.add("W_att_pano", dv, h);
  m.id.nv = p.add("W_nv", dv, h);
  m.id.att_gather = p.add("W_att_gather", dv, h);
  m.id.att_decision = p.add("W_att_decision", dv, h);
  m.id.ep_dir = p.add("W_ep_dir", dv, dv + h);
  m.id.ep_step = p.add("W_ep_step", dv, 2 * h);
  m.id.o = p.add("W_o", dv, h);
  m.id.o_view = p.add("W_o_view", dv, dv);
  m.id.bnv_w = p.add("b_nv.w", 1, h);
  m.id.bnv_b = p.add("b_nv.b", 1, 1);
  m.id.bep_w = p.add("b_ep.w", 1, h);
  m.id.bep_b = p.add("b_ep.b", 1, 1);
  p.init_uniform(seed);
  return m;
}

}  // namespace anav
