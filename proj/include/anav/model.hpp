#pragma once

// Learnable parameters of the agent and their layout.

#include <cstdint>

#include "anav/numcore.hpp"

namespace anav {

struct ModelDims {
  int landmark_dim = 16;
  int hidden = 64;

  int view_dim() const { return landmark_dim + 4; }
};

/// Resolved parameter ids. Matrix shapes (d_v = view dim, H = hidden):
///   enc_w  4H x (d_land + H)       instruction encoder LSTM
///   nav_w  4H x (H + 2 d_v + H)    navigation LSTM over [instr ctx, pano ctx, prev action]
///   ep_w   4H x (H + 2 d_v + H)    exploration-state LSTM over [h_nv, y_prev, a_prev]
///   kw_w   4H x (d_v + H)          knowledge-storage LSTM
///   att_instr H x H, att_pano / nv / att_gather / att_decision / o  d_v x H
///   ep_dir d_v x (d_v + H), ep_step d_v x 2H, o_view d_v x d_v
///   critics: bnv_w, bep_w 1 x H with scalar biases
struct ModelIds {
  nc::ParamId enc_w, enc_b, nav_w, nav_b, ep_w, ep_b, kw_w, kw_b;
  nc::ParamId att_instr, att_pano, nv, att_gather, att_decision, ep_dir, ep_step, o, o_view;
  nc::ParamId bnv_w, bnv_b, bep_w, bep_b;
};

struct Model {
  ModelDims dims;
  nc::ParameterSet params;
  ModelIds id{};

  /// Creates every parameter and initializes uniformly from `seed`.
  static Model create(const ModelDims& dims, std::uint64_t seed);
};

}  // namespace anav
