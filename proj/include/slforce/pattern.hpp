#pragma once

#include "slforce/core.hpp"

#include <string>
#include <vector>

namespace slforce::pattern {

// Cyclic sequence over an n-symbol alphabet in which every length-m word
// occurs exactly once as a window.
struct DeBruijnSeq {
  int alphabet_size = 0;  // n
  int window_len = 0;     // m
  std::vector<int> symbols;
};

// Deterministic construction: Eulerian circuit of the order-(m-1) graph,
// always taking the smallest unused outgoing symbol first.
DeBruijnSeq de_bruijn(int n, int m);

struct PatternSpec {
  int fringe_count = 64;
  int fringe_width_px = 16;
  int height_px = 512;
  DeBruijnSeq sequence;
  std::vector<double> symbol_hues_deg{0.0, 120.0, 240.0};

  int width_px() const { return fringe_count * fringe_width_px; }
};

// Spec with the sequence filled in; hues default to maximally separated
// red/green/blue when left empty.
PatternSpec make_spec(int n, int m, int fringe_count, int fringe_width_px,
                      int height_px,
                      std::vector<double> symbol_hues_deg = {});

// Throws std::invalid_argument when an invariant is violated.
void validate(const PatternSpec& spec);

// Colored sinusoidal fringes: hue per fringe from the symbol sequence,
// saturation 1, intensity one cosine period per fringe (1.0 at the first
// column of every fringe).
Rgb generate_pattern(const PatternSpec& spec);

constexpr int kUnknownSymbol = -1;
constexpr int kUndecodable = -1;

// Nearest canonical hue within tol, else kUnknownSymbol. Ties break toward
// the lower symbol index.
int classify_hue(double hue_deg, const PatternSpec& spec,
                 double tol_deg = 30.0);

struct DecodeParams {
  double hue_tol_deg = 30.0;
  double min_saturation = 0.25;
  double min_value = 0.08;
  // Unknown gaps up to this length are bridged inside a fringe (the
  // intensity trough of each fringe drops below min_value). Negative
  // selects fringe_width_px / 2.
  int max_bridge_px = -1;
};

// Per-pixel absolute fringe id, kUndecodable where no id can be assigned.
// The image must be base-color corrected first.
Eigen::ArrayXXi decode_fringes(const Rgb& image, const PatternSpec& spec,
                               const DecodeParams& params = {});

// Sidecar text format used by the CLI to round-trip a spec next to the
// pattern PNG.
void write_spec_sidecar(const std::string& path, const PatternSpec& spec);
PatternSpec read_spec_sidecar(const std::string& path);

}  // namespace slforce::pattern
