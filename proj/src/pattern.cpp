#include "slforce/pattern.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace slforce::pattern {
namespace {

std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t v = 1;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

}  // namespace

DeBruijnSeq de_bruijn(int n, int m) {
  if (n < 2) throw std::invalid_argument("de_bruijn: alphabet size must be >= 2");
  if (m < 1) throw std::invalid_argument("de_bruijn: window length must be >= 1");
  const std::int64_t total = ipow(n, m);
  if (total > (std::int64_t{1} << 31)) {
    throw std::invalid_argument("de_bruijn: n^m too large");
  }
  const int n_nodes = static_cast<int>(ipow(n, m - 1));

  // Iterative Hierholzer over the (n, m-1) graph; edge labels are emitted
  // in reverse as frames unwind.
  std::vector<int> next_symbol(n_nodes, 0);
  std::vector<std::pair<int, int>> stack;  // (node, symbol taken to reach it)
  stack.reserve(static_cast<size_t>(total) + 1);
  stack.emplace_back(0, -1);
  std::vector<int> seq;
  seq.reserve(static_cast<size_t>(total));
  while (!stack.empty()) {
    auto& [node, via] = stack.back();
    if (next_symbol[node] < n) {
      const int s = next_symbol[node]++;
      stack.emplace_back(static_cast<int>((std::int64_t{node} * n + s) % n_nodes), s);
    } else {
      if (via >= 0) seq.push_back(via);
      stack.pop_back();
    }
  }
  std::reverse(seq.begin(), seq.end());

  DeBruijnSeq out;
  out.alphabet_size = n;
  out.window_len = m;
  out.symbols = std::move(seq);
  return out;
}

PatternSpec make_spec(int n, int m, int fringe_count, int fringe_width_px,
                      int height_px, std::vector<double> symbol_hues_deg) {
  PatternSpec spec;
  spec.sequence = de_bruijn(n, m);
  spec.fringe_count = fringe_count;
  spec.fringe_width_px = fringe_width_px;
  spec.height_px = height_px;
  if (symbol_hues_deg.empty()) {
    spec.symbol_hues_deg.clear();
    for (int i = 0; i < n; ++i) spec.symbol_hues_deg.push_back(360.0 * i / n);
  } else {
    spec.symbol_hues_deg = std::move(symbol_hues_deg);
  }
  validate(spec);
  return spec;
}

void validate(const PatternSpec& spec) {
  const auto& seq = spec.sequence;
  if (seq.alphabet_size < 2 || seq.window_len < 1 || seq.symbols.empty()) {
    throw std::invalid_argument("pattern spec: missing De Bruijn sequence");
  }
  if (spec.fringe_count <= 0 ||
      spec.fringe_count > static_cast<int>(seq.symbols.size())) {
    throw std::invalid_argument(
        "pattern spec: fringe_count must be in [1, sequence length]");
  }
  if (spec.fringe_width_px <= 0 || spec.height_px <= 0) {
    throw std::invalid_argument("pattern spec: non-positive dimensions");
  }
  if (static_cast<int>(spec.symbol_hues_deg.size()) != seq.alphabet_size) {
    throw std::invalid_argument(
        "pattern spec: need exactly one hue per alphabet symbol");
  }
  for (size_t i = 0; i < spec.symbol_hues_deg.size(); ++i) {
    for (size_t j = i + 1; j < spec.symbol_hues_deg.size(); ++j) {
      if (hue_distance_deg(spec.symbol_hues_deg[i], spec.symbol_hues_deg[j]) <
          60.0 - 1e-9) {
        throw std::invalid_argument(
            "pattern spec: symbol hues closer than 60 degrees");
      }
    }
  }
}

Rgb generate_pattern(const PatternSpec& spec) {
  validate(spec);
  const int width = spec.width_px();
  const int height = spec.height_px;
  const int fw = spec.fringe_width_px;

  Rgb img(height, width);
  for (int j = 0; j < spec.fringe_count; ++j) {
    const double hue = spec.symbol_hues_deg[spec.sequence.symbols[j]];
    for (int k = 0; k < fw; ++k) {
      const int col = j * fw + k;
      const double value =
          0.5 + 0.5 * std::cos(2.0 * M_PI * static_cast<double>(k) / fw);
      double r, g, b;
      hsv_to_rgb(hue, 1.0, value, r, g, b);
      img.r.col(col).setConstant(r);
      img.g.col(col).setConstant(g);
      img.b.col(col).setConstant(b);
    }
  }
  return img;
}

int classify_hue(double hue_deg, const PatternSpec& spec, double tol_deg) {
  int best = kUnknownSymbol;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < spec.symbol_hues_deg.size(); ++i) {
    const double d = hue_distance_deg(hue_deg, spec.symbol_hues_deg[i]);
    if (d < best_dist) {
      best = static_cast<int>(i);
      best_dist = d;
    }
  }
  return best_dist <= tol_deg ? best : kUnknownSymbol;
}

namespace {

struct Run {
  int symbol = kUnknownSymbol;
  int begin = 0;  // inclusive column
  int end = 0;    // exclusive column
  std::vector<int> troughs;  // centers of bridged dark gaps
  int len() const { return end - begin; }
};

std::vector<Run> run_length_encode(const std::vector<int>& symbols) {
  std::vector<Run> runs;
  for (int c = 0; c < static_cast<int>(symbols.size());) {
    int e = c + 1;
    while (e < static_cast<int>(symbols.size()) && symbols[e] == symbols[c]) ++e;
    runs.push_back({symbols[c], c, e, {}});
    c = e;
  }
  return runs;
}

// Merge A - gap - B where A and B share a symbol and the unknown gap is
// short; this heals the dark intensity trough at the center of each fringe.
// Trough centers are kept: they count the fringes inside a merged run.
std::vector<Run> bridge_runs(std::vector<Run> runs, int max_gap) {
  std::vector<Run> out;
  for (size_t i = 0; i < runs.size(); ++i) {
    if (!out.empty() && runs[i].symbol == kUnknownSymbol &&
        runs[i].len() <= max_gap && i + 1 < runs.size() &&
        runs[i + 1].symbol == out.back().symbol &&
        out.back().symbol != kUnknownSymbol) {
      out.back().troughs.push_back((runs[i].begin + runs[i].end - 1) / 2);
      out.back().end = runs[i + 1].end;
      ++i;  // consumed the following run as well
    } else {
      out.push_back(runs[i]);
    }
  }
  return out;
}

// A run holding several troughs spans that many same-colored fringes; the
// intensity maxima between consecutive troughs are the fringe boundaries.
std::vector<Run> split_multi_fringe_runs(const std::vector<Run>& runs,
                                         const std::vector<double>& values) {
  std::vector<Run> out;
  for (const Run& run : runs) {
    if (run.symbol == kUnknownSymbol || run.troughs.size() <= 1) {
      out.push_back(run);
      continue;
    }
    int begin = run.begin;
    for (size_t t = 0; t + 1 < run.troughs.size(); ++t) {
      int cut = run.troughs[t];
      double best = -1.0;
      for (int c = run.troughs[t]; c <= run.troughs[t + 1]; ++c) {
        if (values[c] > best) {
          best = values[c];
          cut = c;
        }
      }
      out.push_back({run.symbol, begin, cut, {run.troughs[t]}});
      begin = cut;
    }
    out.push_back({run.symbol, begin, run.end, {run.troughs.back()}});
  }
  return out;
}

}  // namespace

Eigen::ArrayXXi decode_fringes(const Rgb& image, const PatternSpec& spec,
                               const DecodeParams& params) {
  validate(spec);
  const int m = spec.sequence.window_len;
  const int n = spec.sequence.alphabet_size;
  const int width = static_cast<int>(image.cols());
  const int height = static_cast<int>(image.rows());
  if (width < m * spec.fringe_width_px) {
    throw std::invalid_argument("decode_fringes: image narrower than one window");
  }
  const int max_gap =
      params.max_bridge_px >= 0 ? params.max_bridge_px : spec.fringe_width_px / 2;

  // Window code -> cyclic position in the sequence.
  const auto& sym = spec.sequence.symbols;
  const int seq_len = static_cast<int>(sym.size());
  std::unordered_map<std::int64_t, int> window_pos;
  window_pos.reserve(static_cast<size_t>(seq_len) * 2);
  for (int p = 0; p < seq_len; ++p) {
    std::int64_t code = 0;
    for (int k = 0; k < m; ++k) code = code * n + sym[(p + k) % seq_len];
    window_pos.emplace(code, p);
  }

  Eigen::ArrayXXi ids =
      Eigen::ArrayXXi::Constant(height, width, kUndecodable);
  std::vector<int> row_symbols(width);
  std::vector<double> row_values(width);

  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const Hsv hsv =
          rgb_to_hsv(image.r(row, col), image.g(row, col), image.b(row, col));
      row_values[col] = hsv.v;
      row_symbols[col] =
          (hsv.s < params.min_saturation || hsv.v < params.min_value)
              ? kUnknownSymbol
              : classify_hue(hsv.h_deg, spec, params.hue_tol_deg);
    }

    const std::vector<Run> runs = split_multi_fringe_runs(
        bridge_runs(run_length_encode(row_symbols), max_gap), row_values);

    // Blocks of consecutive known runs; short unknown gaps between
    // different symbols do not break a block, long ones do.
    size_t i = 0;
    while (i < runs.size()) {
      if (runs[i].symbol == kUnknownSymbol) {
        ++i;
        continue;
      }
      std::vector<size_t> block{i};
      size_t j = i + 1;
      while (j < runs.size()) {
        if (runs[j].symbol != kUnknownSymbol) {
          block.push_back(j);
          ++j;
        } else if (runs[j].len() <= max_gap && j + 1 < runs.size() &&
                   runs[j + 1].symbol != kUnknownSymbol) {
          block.push_back(j + 1);
          j += 2;
        } else {
          break;
        }
      }
      i = j;

      const int block_size = static_cast<int>(block.size());
      if (block_size < m) continue;

      // The anchored window at the block tail is trusted only when the
      // block is cropped by the image boundary rather than interrupted.
      const bool tail_rescue = runs[block.back()].end == width;

      for (int idx = 0; idx < block_size; ++idx) {
        int anchor = idx;
        if (idx > block_size - m) {
          if (!tail_rescue) continue;
          anchor = block_size - m;
        }
        std::int64_t code = 0;
        for (int k = 0; k < m; ++k) {
          code = code * n + runs[block[static_cast<size_t>(anchor + k)]].symbol;
        }
        const auto it = window_pos.find(code);
        if (it == window_pos.end()) continue;
        const int id = it->second + (idx - anchor);
        if (id >= spec.fringe_count) continue;
        const Run& run = runs[block[static_cast<size_t>(idx)]];
        ids.row(row).segment(run.begin, run.len()).setConstant(id);
      }
    }
  }
  return ids;
}

void write_spec_sidecar(const std::string& path, const PatternSpec& spec) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write spec sidecar: " + path);
  out << "alphabet_size = " << spec.sequence.alphabet_size << "\n";
  out << "window_len = " << spec.sequence.window_len << "\n";
  out << "fringe_count = " << spec.fringe_count << "\n";
  out << "fringe_width_px = " << spec.fringe_width_px << "\n";
  out << "height_px = " << spec.height_px << "\n";
  out << "symbol_hues_deg =";
  for (double h : spec.symbol_hues_deg) out << " " << h;
  out << "\n";
  out << "sequence =";
  for (int s : spec.sequence.symbols) out << " " << s;
  out << "\n";
}

PatternSpec read_spec_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read spec sidecar: " + path);
  PatternSpec spec;
  spec.symbol_hues_deg.clear();
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::istringstream rest(line.substr(eq + 1));
    if (key == "alphabet_size") {
      rest >> spec.sequence.alphabet_size;
    } else if (key == "window_len") {
      rest >> spec.sequence.window_len;
    } else if (key == "fringe_count") {
      rest >> spec.fringe_count;
    } else if (key == "fringe_width_px") {
      rest >> spec.fringe_width_px;
    } else if (key == "height_px") {
      rest >> spec.height_px;
    } else if (key == "symbol_hues_deg") {
      double h;
      while (rest >> h) spec.symbol_hues_deg.push_back(h);
    } else if (key == "sequence") {
      int s;
      while (rest >> s) spec.sequence.symbols.push_back(s);
    }
  }
  validate(spec);
  return spec;
}

}  // namespace slforce::pattern
