#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "forgevqe/fermion.hpp"

namespace fvqe {

namespace {

struct RawTbme {
  std::array<int, 4> raw;
  double canonical_value;
};

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw std::runtime_error("interaction file line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

Model build_nsm(const std::string& interaction_text) {
  std::istringstream in(interaction_text);
  std::string line;
  int line_no = 0;

  std::map<int, Mode> modes;
  std::map<int, double> spes;
  // canonical quadruple -> every raw entry that mapped onto it
  std::map<std::array<int, 4>, std::vector<RawTbme>> tbmes;
  std::map<std::pair<int, int>, int> partition_overrides;  // (layer, mode) -> 0/1

  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string directive;
    if (!(ls >> directive)) continue;

    if (directive == "MODE") {
      int index, tj, tm, ttz;
      std::string label;
      if (!(ls >> index >> tj >> tm >> ttz >> label)) fail(line_no, "malformed MODE line");
      if (index < 0 || index >= 64) fail(line_no, "mode index out of range");
      if (modes.count(index)) fail(line_no, "duplicate MODE index");
      if (std::abs(tm) > tj) fail(line_no, "|2m| exceeds 2j");
      if (((tj - tm) % 2) != 0) fail(line_no, "2m and 2j must have equal parity");
      if (ttz != -1 && ttz != 1) fail(line_no, "2tz must be -1 (proton) or +1 (neutron)");
      Mode m;
      m.twice_j = tj;
      m.twice_m = tm;
      m.twice_tz = ttz;
      m.label = label;
      modes[index] = m;
    } else if (directive == "SPE") {
      int index;
      double e;
      if (!(ls >> index >> e)) fail(line_no, "malformed SPE line");
      spes[index] = e;
    } else if (directive == "TBME") {
      std::array<int, 4> q{};
      double v;
      if (!(ls >> q[0] >> q[1] >> q[2] >> q[3] >> v)) fail(line_no, "malformed TBME line");
      if (q[0] == q[1] || q[2] == q[3])
        fail(line_no, "TBME repeats an index within a creation or annihilation pair");
      double sign = 1.0;
      std::array<int, 4> c = q;
      if (c[0] > c[1]) { std::swap(c[0], c[1]); sign = -sign; }
      if (c[2] > c[3]) { std::swap(c[2], c[3]); sign = -sign; }
      if (std::pair{c[0], c[1]} > std::pair{c[2], c[3]}) {
        std::swap(c[0], c[2]);
        std::swap(c[1], c[3]);
      }
      auto& bucket = tbmes[c];
      auto same_raw = std::find_if(bucket.begin(), bucket.end(),
                                   [&](const RawTbme& r) { return r.raw == q; });
      if (same_raw != bucket.end()) {
        std::cerr << "warning: duplicate TBME " << q[0] << " " << q[1] << " " << q[2] << " "
                  << q[3] << " on line " << line_no << ", last value wins\n";
        same_raw->canonical_value = sign * v;
      } else {
        bucket.push_back({q, sign * v});
      }
    } else if (directive == "PARTITION") {
      int layer, index;
      std::string side;
      if (!(ls >> layer >> index >> side)) fail(line_no, "malformed PARTITION line");
      if (layer != 1 && layer != 2) fail(line_no, "PARTITION layer must be 1 or 2");
      if (side != "A" && side != "B") fail(line_no, "PARTITION side must be A or B");
      partition_overrides[{layer, index}] = (side == "B") ? 1 : 0;
    } else {
      fail(line_no, "unknown directive '" + directive + "'");
    }
  }

  if (modes.empty()) throw std::runtime_error("interaction file declares no modes");
  const int n = int(modes.rbegin()->first) + 1;
  for (int i = 0; i < n; ++i)
    if (!modes.count(i))
      throw std::runtime_error("interaction file: mode indices must be contiguous from 0, missing " +
                               std::to_string(i));

  Model model;
  model.kind = "nsm";
  model.pool_includes_one_body = false;

  ModeTable table;
  for (int i = 0; i < n; ++i) {
    Mode m = modes[i];
    if (auto it = spes.find(i); it != spes.end()) m.spe = it->second;
    table.modes.push_back(m);
  }
  for (const auto& [key, e] : spes) {
    if (key < 0 || key >= n) throw std::runtime_error("SPE index out of range");
    (void)e;
  }

  // Default layer-1 cut: protons (tz = -1) then neutrons. Default layer-2 cut:
  // within each species, the lower-energy half of the modes (ordered by SPE,
  // ties by index) forms the bottom block.
  for (int i = 0; i < n; ++i) table.modes[i].layer1 = (table.modes[i].twice_tz == 1) ? 1 : 0;
  for (int side = 0; side < 2; ++side) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (table.modes[i].layer1 == side) members.push_back(i);
    std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
      return table.modes[a].spe < table.modes[b].spe;
    });
    for (std::size_t k = 0; k < members.size(); ++k)
      table.modes[members[k]].layer2 = (k < (members.size() + 1) / 2) ? 0 : 1;
  }
  for (const auto& [key, tag] : partition_overrides) {
    auto [layer, index] = key;
    if (index < 0 || index >= n) throw std::runtime_error("PARTITION index out of range");
    (layer == 1 ? table.modes[index].layer1 : table.modes[index].layer2) = tag;
  }

  Hamiltonian h;
  h.modes = table;
  for (int i = 0; i < n; ++i)
    if (table.modes[i].spe != 0.0) h.one_body.push_back({i, i, table.modes[i].spe});

  for (const auto& [canon, entries] : tbmes) {
    for (int x : canon)
      if (x < 0 || x >= n) throw std::runtime_error("TBME index out of range");
    double sum = 0.0;
    bool conflict = false;
    for (const auto& e : entries) {
      sum += e.canonical_value;
      if (std::abs(e.canonical_value - entries.front().canonical_value) > 1e-12) conflict = true;
    }
    const double value = sum / double(entries.size());
    if (conflict)
      std::cerr << "warning: inconsistent TBME entries for (" << canon[0] << "," << canon[1]
                << ";" << canon[2] << "," << canon[3]
                << "); using the antisymmetrized average\n";
    if (value != 0.0) h.two_body.push_back({canon[0], canon[1], canon[2], canon[3], value});
  }
  model.h = std::move(h);

  // Parity transform |j,m> -> (-1)^(j-m) |j,-m>, defined when every mode has a
  // partner with the opposite projection in the same orbital.
  ModePermutation parity = ModePermutation::identity(n);
  bool have_parity = true;
  for (int i = 0; i < n && have_parity; ++i) {
    const Mode& m = table.modes[i];
    int partner = -1;
    for (int k = 0; k < n; ++k) {
      const Mode& o = table.modes[k];
      if (o.label == m.label && o.twice_j == m.twice_j && o.twice_tz == m.twice_tz &&
          o.twice_m == -m.twice_m) {
        partner = k;
        break;
      }
    }
    if (partner < 0) {
      have_parity = false;
      break;
    }
    parity.target[i] = partner;
    parity.phase[i] = (((m.twice_j - m.twice_m) / 2) % 2 != 0) ? -1.0 : 1.0;
  }
  if (have_parity) model.symmetries.push_back({"parity", parity});
  return model;
}

Model build_nsm_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open interaction file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return build_nsm(ss.str());
}

}  // namespace fvqe
