#include "forgevqe/forge.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "forgevqe/numerics.hpp"
#include "forgevqe/resources.hpp"
#include "sector_matrix.hpp"

namespace fvqe {

namespace {

inline std::uint64_t bit(int i) { return std::uint64_t(1) << i; }

std::string sector_key(const SectorConstraints& c) {
  std::ostringstream ss;
  std::vector<std::pair<std::uint64_t, int>> groups = c.group_counts;
  std::sort(groups.begin(), groups.end());
  for (const auto& [mask, count] : groups) ss << mask << ":" << count << ";";
  ss << "jz=" << (c.twice_jz ? std::to_string(*c.twice_jz) : "*");
  return ss.str();
}

SectorConstraints det_sector(const ModeTable& table, std::uint64_t det) {
  SectorConstraints c;
  for (int tz : table.distinct_tz()) {
    const std::uint64_t mask = table.mask_tz(tz);
    c.group_counts.push_back({mask, std::popcount(det & mask)});
  }
  c.twice_jz = table.det_twice_jz(det);
  return c;
}

cdouble dot_noconj(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
  cdouble acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

GlobalSector fh_sector(int n_up, int n_down) {
  GlobalSector s;
  s.tz_counts = {{0, n_up + n_down}};
  s.twice_jz = n_up - n_down;
  return s;
}

GlobalSector nsm_sector(int z_valence, int n_valence, std::optional<int> twice_jz) {
  GlobalSector s;
  s.tz_counts = {{-1, z_valence}, {1, n_valence}};
  s.twice_jz = twice_jz;
  return s;
}

double convergence_rate(double infidelity, int n_iterations) {
  const double i = std::max(infidelity, 1e-300);
  return -std::log(i) / double(n_iterations + 1);
}

RunMetrics compute_metrics(const std::vector<cdouble>& state, double energy,
                           const GroundStateResult& oracle, int n_iterations) {
  if (state.size() != oracle.coeffs.size())
    throw std::invalid_argument("compute_metrics: state/oracle dimension mismatch");
  if (oracle.energy == 0.0)
    throw std::invalid_argument("compute_metrics: relative error undefined at E = 0");
  const double n2 = detail::sector_inner(state, state).real();
  if (n2 <= 0.0) throw std::invalid_argument("compute_metrics: zero-norm state");
  double overlap2 = 0.0;
  if (oracle.degenerate && !oracle.degenerate_space.empty()) {
    for (const auto& vec : oracle.degenerate_space) {
      cdouble o{0.0, 0.0};
      for (std::size_t i = 0; i < state.size(); ++i) o += vec[i] * state[i];
      overlap2 += std::norm(o);
    }
  } else {
    cdouble o{0.0, 0.0};
    for (std::size_t i = 0; i < state.size(); ++i) o += oracle.coeffs[i] * state[i];
    overlap2 = std::norm(o);
  }
  RunMetrics m;
  m.infidelity = 1.0 - overlap2 / n2;
  m.eps_e = std::abs(energy - oracle.energy) / std::abs(oracle.energy);
  m.rate = convergence_rate(m.infidelity, n_iterations);
  return m;
}

std::vector<SecondLayerTerm> expand_second_layer(double lambda,
                                                 const std::pair<int, int>& first_distribution,
                                                 const std::pair<int, int>& second_distribution,
                                                 double alpha) {
  if (lambda < 0.0) throw std::invalid_argument("expand_second_layer: negative lambda");
  const double root = std::sqrt(lambda);
  return {{first_distribution, root * std::cos(alpha)},
          {second_distribution, root * std::sin(alpha)}};
}

// ---------------------------------------------------------------------------

struct Engine::Impl {
  Model model;
  GlobalSector gsector;
  EngineOptions opt;

  SectorBasis global;
  GroundStateResult oracle;
  Eigen::SparseMatrix<double> hmat;

  int n_sides = 1;
  int cut_mode = 0;
  std::array<ModeRange, 2> side_range{};
  std::array<ModeTable, 2> side_table{};

  struct Leaf {
    ModeRange range;       // global modes
    int side = 0;
    int offset = 0;        // local offset within the side
    ModeTable table;
  };
  std::vector<Leaf> leaves;

  struct Circuit {
    int leaf = 0;
    SectorBasis basis;
    std::vector<ExcitationGenerator> pool;
    std::vector<ExcitationGenerator> ops;
    std::vector<int> param_index;
    std::vector<std::uint64_t> init_dets;
    std::vector<std::vector<cdouble>> slot_states;
  };
  std::vector<Circuit> circuits;
  std::map<std::pair<int, std::string>, int> circuit_index;

  struct Component {
    std::vector<std::pair<int, int>> slots;  // (circuit, slot) per leaf of the source side
    int alpha = -1;
    bool is_sin = false;
  };
  struct SideFactor {
    int source_side = 0;
    int transform = -1;
    std::vector<Component> components;
    SectorBasis src_basis;
    SectorBasis mat_basis;
    std::vector<std::pair<std::int32_t, cdouble>> transform_map;  // src idx -> (dst idx, factor)
    std::vector<std::int32_t> global_map;                         // global idx -> mat idx or -1
    std::vector<std::vector<std::int32_t>> embeds;                // per component: (i0*d1+i1) -> src idx
    std::vector<cdouble> mat;                                     // materialized factor
  };
  struct Term {
    int cluster = 0;
    int calib = 1;
    bool derived = false;
    int transform = -1;
    int source = -1;  // simulated term this one is derived from
    std::vector<SideFactor> sides;
  };
  std::vector<Term> terms;

  std::vector<double> cluster_lambda;
  std::vector<int> cluster_mult;
  double schmidt_bound = 0.0;

  std::vector<double> thetas, alphas;
  std::optional<double> beta;

  std::vector<IterationRecord> records;
  std::string stop_reason;
  bool stopped = false;
  bool factors_overridden = false;

  CnotModel cnot_model;

  // Schmidt factors kept from the build for reconstruction and calibration.
  std::vector<SectorSchmidtTerm> kept_schmidt;

  // ---- construction -------------------------------------------------------

  Impl(const Model& m, const GlobalSector& sector, const EngineOptions& options)
      : model(m), gsector(sector), opt(options) {
    if (opt.cuts < 0 || opt.cuts > 2) throw std::invalid_argument("cuts must be 0, 1, or 2");
    if (opt.cuts == 2 && model.kind == "fh")
      throw std::invalid_argument("no second-layer partition is defined for the Hubbard chain");

    const ModeTable& table = model.h.modes;
    global = sector_basis(table, species_sector(table, gsector.tz_counts, gsector.twice_jz));
    oracle = ground_state(model.h, global, opt.oracle);
    hmat = detail::build_sector_matrix(model.h, global);

    if (opt.cuts == 0)
      build_plain();
    else
      build_forged();
    warm_up_coefficients();
    push_record_zero();
  }

  // Coefficient parameters (second-layer angles, the optional lambda angle)
  // start at energy-suboptimal values; settle them once before the loop so a
  // thin candidate pool cannot strand them.
  void warm_up_coefficients() {
    std::vector<int> free;
    for (std::size_t i = 0; i < alphas.size(); ++i) free.push_back(int(thetas.size() + i));
    if (beta) free.push_back(int(thetas.size() + alphas.size()));
    if (free.empty()) return;
    optimize(free);
  }

  // Plain run: one leaf covering the register, one circuit, one term.
  void build_plain() {
    n_sides = 1;
    side_range[0] = {0, model.h.modes.size()};
    side_table[0] = model.h.modes;
    leaves.push_back({side_range[0], 0, 0, model.h.modes});

    Circuit c;
    c.leaf = 0;
    c.basis = global;
    c.pool = build_pool(model.h.modes, model.pool_includes_one_body);
    c.init_dets.push_back(lowest_det(c.basis, 0));
    circuits.push_back(std::move(c));

    Term t;
    t.cluster = 0;
    SideFactor f;
    f.source_side = 0;
    f.components.push_back({{{0, 0}}, -1, false});
    f.src_basis = circuits[0].basis;
    f.mat_basis = f.src_basis;
    f.global_map.resize(global.dim());
    for (std::size_t g = 0; g < global.dim(); ++g) f.global_map[g] = std::int32_t(g);
    f.embeds.push_back({});
    t.sides.push_back(std::move(f));
    terms.push_back(std::move(t));

    cluster_lambda = {1.0};
    cluster_mult = {1};
    schmidt_bound = 0.0;
    refresh_states();
  }

  std::uint64_t lowest_det(const SectorBasis& basis, int rank) const {
    std::vector<std::uint64_t> dets = basis.dets;
    std::stable_sort(dets.begin(), dets.end(), [&](std::uint64_t a, std::uint64_t b) {
      const double ea = diagonal_energy(model.h, a), eb = diagonal_energy(model.h, b);
      if (ea != eb) return ea < eb;
      return a < b;
    });
    if (rank >= int(dets.size()))
      throw std::runtime_error("not enough orthogonal determinants in the sector");
    return dets[rank];
  }

  // Diagonal energy of a leaf/side-local determinant, evaluated by placing it
  // at the block's global position.
  double local_diag(const ModeRange& range, std::uint64_t local_det) const {
    return diagonal_energy(model.h, local_det << range.begin);
  }

  std::uint64_t lowest_local_det(const SectorBasis& basis, const ModeRange& range, int rank) const {
    std::vector<std::uint64_t> dets = basis.dets;
    std::stable_sort(dets.begin(), dets.end(), [&](std::uint64_t a, std::uint64_t b) {
      const double ea = local_diag(range, a), eb = local_diag(range, b);
      if (ea != eb) return ea < eb;
      return a < b;
    });
    if (rank >= int(dets.size()))
      throw std::runtime_error("not enough orthogonal determinants in a factor sector");
    return dets[rank];
  }

  void build_forged() {
    const ModeTable& table = model.h.modes;
    auto [ra, rb] = table.layer1_blocks();
    n_sides = 2;
    side_range = {ra, rb};
    side_table = {table.slice(ra), table.slice(rb)};
    cut_mode = ra.end;

    if (opt.cuts == 1) {
      leaves.push_back({ra, 0, 0, side_table[0]});
      leaves.push_back({rb, 1, 0, side_table[1]});
    } else {
      for (int side = 0; side < 2; ++side) {
        auto [bot, top] = table.layer2_blocks(side_range[side]);
        leaves.push_back({bot, side, bot.begin - side_range[side].begin, table.slice(bot)});
        leaves.push_back({top, side, top.begin - side_range[side].begin, table.slice(top)});
      }
    }

    // Oracle Schmidt spectrum across the layer-1 cut.
    auto schmidt = decompose_in_sector(table, global, oracle.coeffs, cut_mode);
    std::vector<double> values;
    for (const auto& t : schmidt) values.push_back(t.value);
    auto clusters = degeneracy_clusters(values, tol::schmidt_cluster_rel_gap, 1e-8);
    if (clusters.empty()) throw std::runtime_error("no Schmidt weight above threshold");

    int n_keep_clusters = 0;
    if (opt.chi_cut <= 0) {
      n_keep_clusters = std::min<std::size_t>(2, clusters.size());
    } else {
      int count = 0;
      while (n_keep_clusters < int(clusters.size()) && count < opt.chi_cut) {
        count += clusters[n_keep_clusters].second - clusters[n_keep_clusters].first;
        ++n_keep_clusters;
      }
    }

    double kept_weight = 0.0;
    std::vector<int> term_cluster;
    for (int ci = 0; ci < n_keep_clusters; ++ci) {
      for (int i = clusters[ci].first; i < clusters[ci].second; ++i) {
        kept_schmidt.push_back(schmidt[i]);
        term_cluster.push_back(ci);
        kept_weight += values[i] * values[i];
      }
    }
    schmidt_bound = 1.0 - kept_weight;

    cluster_lambda.assign(n_keep_clusters, 0.0);
    cluster_mult.assign(n_keep_clusters, 0);
    for (std::size_t i = 0; i < kept_schmidt.size(); ++i) {
      cluster_lambda[term_cluster[i]] += kept_schmidt[i].value / std::sqrt(kept_weight);
      cluster_mult[term_cluster[i]] += 1;
    }
    for (int c = 0; c < n_keep_clusters; ++c) cluster_lambda[c] /= double(cluster_mult[c]);

    if (opt.lambda_variational) {
      if (n_keep_clusters != 2)
        throw std::invalid_argument("variational lambda needs exactly two Schmidt clusters");
      beta = std::atan2(cluster_lambda[1] * std::sqrt(double(cluster_mult[1])),
                        cluster_lambda[0] * std::sqrt(double(cluster_mult[0])));
    }

    // Identify which kept terms follow from others by a model symmetry.
    const int nk = int(kept_schmidt.size());
    std::vector<int> derived_from(nk, -1), derived_via(nk, -1);
    std::vector<std::string> signature(nk);
    for (int i = 0; i < nk; ++i)
      signature[i] = sector_key(kept_schmidt[i].basis_a.constraints) + "|" +
                     sector_key(kept_schmidt[i].basis_b.constraints);
    for (int i = 0; i < nk; ++i) {
      if (derived_from[i] >= 0) continue;
      const std::uint64_t rep = kept_schmidt[i].basis_a.dets[0] |
                                (kept_schmidt[i].basis_b.dets[0] << cut_mode);
      for (int s = 0; s < int(model.symmetries.size()); ++s) {
        auto [img, factor] = fvqe::detail::permute_det(rep, model.symmetries[s].perm);
        (void)factor;
        const std::uint64_t img_a = img & (bit(cut_mode) - 1);
        const std::uint64_t img_b = img >> cut_mode;
        const std::string key = sector_key(det_sector(side_table[0], img_a)) + "|" +
                                sector_key(det_sector(side_table[1], img_b));
        if (key == signature[i]) continue;
        for (int j = 0; j < nk; ++j) {
          if (j == i || derived_from[j] >= 0 || term_cluster[j] != term_cluster[i]) continue;
          if (signature[j] == key) {
            derived_from[j] = i;
            derived_via[j] = s;
            break;
          }
        }
      }
    }

    // Simulated terms first: circuits, slots, components.
    terms.resize(nk);
    for (int i = 0; i < nk; ++i) {
      terms[i].cluster = term_cluster[i];
      if (derived_from[i] >= 0) continue;
      terms[i].sides.resize(2);
      for (int side = 0; side < 2; ++side) {
        const SectorBasis& sb = (side == 0) ? kept_schmidt[i].basis_a : kept_schmidt[i].basis_b;
        SideFactor f;
        f.source_side = side;
        f.src_basis = sb;
        if (opt.cuts == 1) {
          const int leaf = side;
          const int circ = get_or_create_circuit(leaf, sb.constraints);
          const int slot = add_slot(circ);
          f.components.push_back({{{circ, slot}}, -1, false});
        } else {
          build_second_layer_side(f, i, side, sb);
        }
        terms[i].sides[side] = std::move(f);
      }
    }
    // Derived terms share their source's components and apply the transform.
    for (int i = 0; i < nk; ++i) {
      if (derived_from[i] < 0) continue;
      const int src = derived_from[i];
      const int sym = derived_via[i];
      terms[i].derived = true;
      terms[i].transform = sym;
      terms[i].source = src;
      terms[i].sides.resize(2);
      for (int dst = 0; dst < 2; ++dst) {
        const int src_side = transform_source_side(sym, dst);
        SideFactor f;
        f.source_side = src_side;
        f.transform = sym;
        f.components = terms[src].sides[src_side].components;
        f.src_basis = terms[src].sides[src_side].src_basis;
        terms[i].sides[dst] = std::move(f);
      }
    }

    finalize_side_structures();
    refresh_states();
    calibrate();
    refresh_states();
    const double overlap = max_term_overlap();
    if (overlap > tol::term_orthogonality)
      throw std::runtime_error("forged reference is not orthogonal: term overlap " +
                               std::to_string(overlap));
  }

  // Side of the register a symmetry sends `src_side` to.
  int transform_source_side(int sym, int dst_side) const {
    const auto& perm = model.symmetries[sym].perm;
    for (int src = 0; src < 2; ++src) {
      const int g = side_range[src].begin;
      const int img = perm.target[g];
      if (img >= side_range[dst_side].begin && img < side_range[dst_side].end) return src;
    }
    throw std::runtime_error("symmetry does not map partition sides onto each other");
  }

  int get_or_create_circuit(int leaf, const SectorConstraints& constraints) {
    const auto key = std::make_pair(leaf, sector_key(constraints));
    auto it = circuit_index.find(key);
    if (it != circuit_index.end()) return it->second;
    Circuit c;
    c.leaf = leaf;
    c.basis = sector_basis(leaves[leaf].table, constraints);
    c.pool = build_pool(leaves[leaf].table, model.pool_includes_one_body);
    circuits.push_back(std::move(c));
    circuit_index[key] = int(circuits.size()) - 1;
    return int(circuits.size()) - 1;
  }

  int add_slot(int circ) {
    Circuit& c = circuits[circ];
    if (c.basis.dim() == 1 && !c.init_dets.empty()) return 0;  // forced sharing
    const int rank = int(c.init_dets.size());
    c.init_dets.push_back(lowest_local_det(c.basis, leaves[c.leaf].range, rank));
    return rank;
  }

  // Successive terms that land in the same side sector and distribution take
  // the next determinant in the energy ordering, so tiny leaf sectors cannot
  // force two terms onto identical factor states.
  std::map<std::string, int> side_det_rank;

  // Split a side factor into two particle-number distributions over the
  // bottom/top leaves: the leading term uses the two extreme distributions,
  // every other term the two lowest-energy ones.
  void build_second_layer_side(SideFactor& f, int term_idx, int side, const SectorBasis& sb) {
    const int leaf_bot = 2 * side, leaf_top = 2 * side + 1;
    const int w_bot = leaves[leaf_bot].range.width();

    // Feasible distributions with their determinants ordered by diagonal energy.
    std::map<int, std::vector<std::uint64_t>> dists;
    for (std::uint64_t d : sb.dets) dists[std::popcount(d & (bit(w_bot) - 1))].push_back(d);
    for (auto& [nb, dets] : dists) {
      (void)nb;
      std::stable_sort(dets.begin(), dets.end(), [&](std::uint64_t a, std::uint64_t b) {
        const double ea = local_diag(side_range[side], a), eb = local_diag(side_range[side], b);
        if (ea != eb) return ea < eb;
        return a < b;
      });
    }
    if (dists.empty()) throw std::runtime_error("second layer: empty side sector");

    std::vector<int> chosen_nb;
    if (terms[term_idx].cluster == 0) {
      chosen_nb.push_back(dists.rbegin()->first);  // everything in the bottom leaf
      if (dists.size() > 1) chosen_nb.push_back(dists.begin()->first);
    } else {
      std::vector<int> ranked;
      for (const auto& [nb, dets] : dists) ranked.push_back(nb);
      std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        const double ea = local_diag(side_range[side], dists[a].front());
        const double eb = local_diag(side_range[side], dists[b].front());
        if (ea != eb) return ea < eb;
        return a > b;
      });
      chosen_nb.push_back(ranked[0]);
      if (ranked.size() > 1) chosen_nb.push_back(ranked[1]);
    }

    int alpha_idx = -1;
    if (chosen_nb.size() == 2) {
      alpha_idx = int(alphas.size());
      alphas.push_back(0.0);
    }
    const std::string side_key = sector_key(sb.constraints) + "#" + std::to_string(side);
    for (std::size_t ci = 0; ci < chosen_nb.size(); ++ci) {
      const auto& dets = dists[chosen_nb[ci]];
      const int rank = side_det_rank[side_key + ":" + std::to_string(chosen_nb[ci])]++;
      if (rank >= int(dets.size()))
        throw std::runtime_error(
            "second layer: not enough determinants to keep same-sector terms orthogonal");
      const std::uint64_t det = dets[rank];
      const std::uint64_t d_bot = det & (bit(w_bot) - 1);
      const std::uint64_t d_top = det >> w_bot;
      Component comp;
      comp.alpha = alpha_idx;
      comp.is_sin = (ci == 1);
      const int cb = get_or_create_circuit(leaf_bot, det_sector(leaves[leaf_bot].table, d_bot));
      comp.slots.push_back({cb, add_slot_with_det(cb, d_bot)});
      const int ct = get_or_create_circuit(leaf_top, det_sector(leaves[leaf_top].table, d_top));
      comp.slots.push_back({ct, add_slot_with_det(ct, d_top)});
      f.components.push_back(std::move(comp));
    }
  }

  // Slot whose initial determinant matches the requested split; reuses a
  // dimension-one sector slot, otherwise allocates the next orthogonal one.
  int add_slot_with_det(int circ, std::uint64_t det) {
    Circuit& c = circuits[circ];
    if (c.basis.dim() == 1) {
      if (c.init_dets.empty()) c.init_dets.push_back(c.basis.dets[0]);
      return 0;
    }
    for (std::size_t k = 0; k < c.init_dets.size(); ++k)
      if (c.init_dets[k] == det) {
        // A fresh orthogonal start for a new term in an occupied sector.
        const int rank = int(c.init_dets.size());
        std::uint64_t cand;
        int r = 0;
        do {
          cand = lowest_local_det(c.basis, leaves[c.leaf].range, r++);
        } while (std::find(c.init_dets.begin(), c.init_dets.end(), cand) != c.init_dets.end() &&
                 r < int(c.basis.dim()));
        if (std::find(c.init_dets.begin(), c.init_dets.end(), cand) != c.init_dets.end())
          throw std::runtime_error("factor sector too small for orthogonal slots");
        c.init_dets.push_back(cand);
        return rank;
      }
    c.init_dets.push_back(det);
    return int(c.init_dets.size()) - 1;
  }

  void finalize_side_structures() {
    for (auto& term : terms) {
      for (int side = 0; side < n_sides; ++side) {
        SideFactor& f = term.sides[side];
        // Materialized basis: the transform image of the source sector.
        if (f.transform < 0) {
          f.mat_basis = f.src_basis;
        } else {
          const auto local = local_transform(f.transform, f.source_side, side);
          auto [img, factor] = fvqe::detail::permute_det(f.src_basis.dets[0], local);
          (void)factor;
          f.mat_basis = sector_basis(side_table[side], det_sector(side_table[side], img));
          f.transform_map.resize(f.src_basis.dim());
          for (std::size_t i = 0; i < f.src_basis.dim(); ++i) {
            auto [d, fac] = fvqe::detail::permute_det(f.src_basis.dets[i], local);
            const auto j = f.mat_basis.index_of(d);
            if (j < 0) throw std::runtime_error("transform image leaves its sector");
            f.transform_map[i] = {std::int32_t(j), fac};
          }
        }
        // Global determinant -> materialized factor index.
        f.global_map.resize(global.dim());
        for (std::size_t g = 0; g < global.dim(); ++g) {
          const std::uint64_t det = global.dets[g];
          const std::uint64_t local =
              (side == 0) ? (det & (bit(cut_mode ? cut_mode : side_range[0].end) - 1))
                          : (det >> cut_mode);
          f.global_map[g] = std::int32_t(f.mat_basis.index_of(local));
        }
        // Embedding tables for two-leaf components.
        f.embeds.resize(f.components.size());
        for (std::size_t ci = 0; ci < f.components.size(); ++ci) {
          const auto& comp = f.components[ci];
          if (comp.slots.size() < 2) continue;
          const auto& b0 = circuits[comp.slots[0].first].basis;
          const auto& b1 = circuits[comp.slots[1].first].basis;
          const int w0 = leaves[circuits[comp.slots[0].first].leaf].range.width();
          auto& table = f.embeds[ci];
          table.resize(b0.dim() * b1.dim());
          for (std::size_t i0 = 0; i0 < b0.dim(); ++i0)
            for (std::size_t i1 = 0; i1 < b1.dim(); ++i1) {
              const std::uint64_t d = b0.dets[i0] | (b1.dets[i1] << w0);
              const auto idx = f.src_basis.index_of(d);
              if (idx < 0) throw std::runtime_error("component determinant outside side sector");
              table[i0 * b1.dim() + i1] = std::int32_t(idx);
            }
        }
      }
    }
  }

  ModePermutation local_transform(int sym, int src_side, int dst_side) const {
    const auto& perm = model.symmetries[sym].perm;
    const ModeRange src = side_range[src_side], dst = side_range[dst_side];
    ModePermutation local;
    local.target.resize(src.width());
    local.phase.resize(src.width());
    for (int k = 0; k < src.width(); ++k) {
      const int img = perm.target[src.begin + k];
      if (img < dst.begin || img >= dst.end)
        throw std::runtime_error("symmetry does not map the source side onto the target side");
      local.target[k] = img - dst.begin;
      local.phase[k] = perm.phase[src.begin + k];
    }
    return local;
  }

  // ---- runtime state ------------------------------------------------------

  double lambda_of(int cluster) const {
    if (beta) {
      if (cluster == 0) return std::cos(*beta) / std::sqrt(double(cluster_mult[0]));
      return std::sin(*beta) / std::sqrt(double(cluster_mult[1]));
    }
    return cluster_lambda[cluster];
  }

  double dlambda_dbeta(int cluster) const {
    if (cluster == 0) return -std::sin(*beta) / std::sqrt(double(cluster_mult[0]));
    return std::cos(*beta) / std::sqrt(double(cluster_mult[1]));
  }

  double kappa(const Term& t) const { return lambda_of(t.cluster) * double(t.calib); }

  void refresh_slots() {
    if (factors_overridden) return;
    for (auto& c : circuits) {
      c.slot_states.assign(c.init_dets.size(), {});
      for (std::size_t v = 0; v < c.init_dets.size(); ++v) {
        auto& st = c.slot_states[v];
        st.assign(c.basis.dim(), cdouble{0.0, 0.0});
        st[c.basis.index_of(c.init_dets[v])] = 1.0;
        for (std::size_t k = 0; k < c.ops.size(); ++k)
          detail::sector_apply_excitation(st, c.basis, c.ops[k], thetas[c.param_index[k]]);
      }
    }
  }

  double weight(const Component& comp) const {
    if (comp.alpha < 0) return 1.0;
    return comp.is_sin ? std::sin(alphas[comp.alpha]) : std::cos(alphas[comp.alpha]);
  }

  void materialize() {
    for (auto& term : terms) {
      for (int side = 0; side < n_sides; ++side) {
        SideFactor& f = term.sides[side];
        std::vector<cdouble> src(f.src_basis.dim(), cdouble{0.0, 0.0});
        for (std::size_t ci = 0; ci < f.components.size(); ++ci) {
          const auto& comp = f.components[ci];
          const double w = weight(comp);
          if (comp.slots.size() == 1) {
            const auto& st = circuits[comp.slots[0].first].slot_states[comp.slots[0].second];
            for (std::size_t i = 0; i < src.size(); ++i) src[i] += w * st[i];
          } else {
            const auto& s0 = circuits[comp.slots[0].first].slot_states[comp.slots[0].second];
            const auto& s1 = circuits[comp.slots[1].first].slot_states[comp.slots[1].second];
            const auto& tab = f.embeds[ci];
            for (std::size_t i0 = 0; i0 < s0.size(); ++i0) {
              if (s0[i0] == cdouble{0.0, 0.0}) continue;
              for (std::size_t i1 = 0; i1 < s1.size(); ++i1)
                src[tab[i0 * s1.size() + i1]] += w * s0[i0] * s1[i1];
            }
          }
        }
        if (f.transform < 0) {
          f.mat = std::move(src);
        } else {
          f.mat.assign(f.mat_basis.dim(), cdouble{0.0, 0.0});
          for (std::size_t i = 0; i < src.size(); ++i)
            f.mat[f.transform_map[i].first] += f.transform_map[i].second * src[i];
        }
      }
    }
  }

  void refresh_states() {
    refresh_slots();
    materialize();
  }

  std::vector<cdouble> assemble_raw() const {
    std::vector<cdouble> c(global.dim(), cdouble{0.0, 0.0});
    for (const auto& term : terms) {
      const double k = kappa(term);
      for (std::size_t g = 0; g < global.dim(); ++g) {
        cdouble amp{k, 0.0};
        bool ok = true;
        for (int side = 0; side < n_sides; ++side) {
          const auto idx = term.sides[side].global_map[g];
          if (idx < 0) {
            ok = false;
            break;
          }
          amp *= term.sides[side].mat[idx];
        }
        if (ok) c[g] += amp;
      }
    }
    return c;
  }

  std::vector<cdouble> apply_h(const std::vector<cdouble>& v) const {
    Eigen::VectorXd re(v.size()), im(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      re(i) = v[i].real();
      im(i) = v[i].imag();
    }
    Eigen::VectorXd hre = hmat * re, him = hmat * im;
    std::vector<cdouble> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = {hre(i), him(i)};
    return out;
  }

  double energy_of(const std::vector<cdouble>& c) const {
    const auto hc = apply_h(c);
    const double n2 = detail::sector_inner(c, c).real();
    if (n2 <= 1e-24) throw std::runtime_error("assembled state has zero norm");
    return detail::sector_inner(c, hc).real() / n2;
  }

  struct Gradients {
    double energy = 0.0;
    std::vector<double> theta;
    std::vector<double> alpha;
    double beta = 0.0;
    // per (circuit, slot): linear form F with dE = 2 Re sum_i F[i] dpsi[i]
    std::vector<std::vector<std::vector<cdouble>>> slot_forms;
  };

  // Energy, the full analytic gradient, and the slot-level linear forms used
  // by the candidate scan. Everything is evaluated at the current parameters.
  Gradients gradients(bool with_theta = true) const {
    Gradients g;
    const auto c = assemble_raw();
    const auto hc = apply_h(c);
    const double n2 = detail::sector_inner(c, c).real();
    if (n2 <= 1e-24) throw std::runtime_error("assembled state has zero norm");
    const double e = detail::sector_inner(c, hc).real() / n2;
    g.energy = e;

    std::vector<cdouble> r(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) r[i] = (hc[i] - e * c[i]) / n2;

    g.theta.assign(thetas.size(), 0.0);
    g.alpha.assign(alphas.size(), 0.0);
    g.slot_forms.resize(circuits.size());
    for (std::size_t ci = 0; ci < circuits.size(); ++ci) {
      g.slot_forms[ci].resize(circuits[ci].init_dets.size());
      for (auto& f : g.slot_forms[ci])
        f.assign(circuits[ci].basis.dim(), cdouble{0.0, 0.0});
    }

    for (const auto& term : terms) {
      const double k = kappa(term);
      // Side-level linear forms: F_side[x] = k * sum_g conj(r[g]) * other(g).
      for (int side = 0; side < n_sides; ++side) {
        const SideFactor& f = term.sides[side];
        std::vector<cdouble> fmed(f.mat_basis.dim(), cdouble{0.0, 0.0});
        for (std::size_t gidx = 0; gidx < global.dim(); ++gidx) {
          const auto x = f.global_map[gidx];
          if (x < 0) continue;
          cdouble other{1.0, 0.0};
          bool ok = true;
          for (int s2 = 0; s2 < n_sides; ++s2) {
            if (s2 == side) continue;
            const auto y = term.sides[s2].global_map[gidx];
            if (y < 0) {
              ok = false;
              break;
            }
            other *= term.sides[s2].mat[y];
          }
          if (ok) fmed[x] += k * std::conj(r[gidx]) * other;
        }
        // Pull the form back through the transform onto the source side.
        std::vector<cdouble> fsrc;
        if (f.transform < 0) {
          fsrc = std::move(fmed);
        } else {
          fsrc.assign(f.src_basis.dim(), cdouble{0.0, 0.0});
          for (std::size_t i = 0; i < f.src_basis.dim(); ++i)
            fsrc[i] = fmed[f.transform_map[i].first] * f.transform_map[i].second;
        }
        // Distribute onto slots and accumulate alpha derivatives.
        for (std::size_t ci = 0; ci < f.components.size(); ++ci) {
          const auto& comp = f.components[ci];
          const double w = weight(comp);
          if (comp.slots.size() == 1) {
            auto& form = g.slot_forms[comp.slots[0].first][comp.slots[0].second];
            const auto& st = circuits[comp.slots[0].first].slot_states[comp.slots[0].second];
            cdouble dsum{0.0, 0.0};
            for (std::size_t i = 0; i < form.size(); ++i) {
              form[i] += w * fsrc[i];
              dsum += fsrc[i] * st[i];
            }
            if (comp.alpha >= 0) {
              const double dw = comp.is_sin ? std::cos(alphas[comp.alpha])
                                            : -std::sin(alphas[comp.alpha]);
              g.alpha[comp.alpha] += 2.0 * (dw * dsum).real();
            }
          } else {
            const auto& s0 = circuits[comp.slots[0].first].slot_states[comp.slots[0].second];
            const auto& s1 = circuits[comp.slots[1].first].slot_states[comp.slots[1].second];
            auto& f0 = g.slot_forms[comp.slots[0].first][comp.slots[0].second];
            auto& f1 = g.slot_forms[comp.slots[1].first][comp.slots[1].second];
            const auto& tab = f.embeds[ci];
            cdouble dsum{0.0, 0.0};
            for (std::size_t i0 = 0; i0 < s0.size(); ++i0) {
              for (std::size_t i1 = 0; i1 < s1.size(); ++i1) {
                const cdouble fs = fsrc[tab[i0 * s1.size() + i1]];
                f0[i0] += w * fs * s1[i1];
                f1[i1] += w * fs * s0[i0];
                dsum += fs * s0[i0] * s1[i1];
              }
            }
            if (comp.alpha >= 0) {
              const double dw = comp.is_sin ? std::cos(alphas[comp.alpha])
                                            : -std::sin(alphas[comp.alpha]);
              g.alpha[comp.alpha] += 2.0 * (dw * dsum).real();
            }
          }
        }
      }
      if (beta) {
        // dE/dbeta through the term coefficient.
        cdouble acc{0.0, 0.0};
        for (std::size_t gidx = 0; gidx < global.dim(); ++gidx) {
          cdouble amp{1.0, 0.0};
          bool ok = true;
          for (int side = 0; side < n_sides; ++side) {
            const auto idx = term.sides[side].global_map[gidx];
            if (idx < 0) {
              ok = false;
              break;
            }
            amp *= term.sides[side].mat[idx];
          }
          if (ok) acc += std::conj(r[gidx]) * amp;
        }
        g.beta += 2.0 * (double(term.calib) * dlambda_dbeta(term.cluster) * acc).real();
      }
    }

    if (with_theta) {
      // Reverse sweep per circuit and slot. U^T = exp(-i theta T) because the
      // rotations are real orthogonal in the determinant basis.
      const cdouble iu{0.0, 1.0};
      for (std::size_t ci = 0; ci < circuits.size(); ++ci) {
        const Circuit& circ = circuits[ci];
        const int kops = int(circ.ops.size());
        if (kops == 0) continue;
        for (std::size_t v = 0; v < circ.init_dets.size(); ++v) {
          std::vector<std::vector<cdouble>> fwd(kops + 1);
          fwd[0].assign(circ.basis.dim(), cdouble{0.0, 0.0});
          fwd[0][circ.basis.index_of(circ.init_dets[v])] = 1.0;
          for (int k = 0; k < kops; ++k) {
            fwd[k + 1] = fwd[k];
            detail::sector_apply_excitation(fwd[k + 1], circ.basis, circ.ops[k],
                                            thetas[circ.param_index[k]]);
          }
          std::vector<cdouble> b = g.slot_forms[ci][v];
          for (int k = kops - 1; k >= 0; --k) {
            const auto tphi = detail::sector_apply_generator(fwd[k + 1], circ.basis, circ.ops[k]);
            g.theta[circ.param_index[k]] += 2.0 * (iu * dot_noconj(b, tphi)).real();
            detail::sector_apply_excitation(b, circ.basis, circ.ops[k],
                                            -thetas[circ.param_index[k]]);
          }
        }
      }
    }
    return g;
  }

  double candidate_gradient_with_forms(const Gradients& g, int circuit_id,
                                       const ExcitationGenerator& gen) const {
    const Circuit& c = circuits[circuit_id];
    const cdouble iu{0.0, 1.0};
    double val = 0.0;
    for (std::size_t v = 0; v < c.init_dets.size(); ++v) {
      const auto tpsi = detail::sector_apply_generator(c.slot_states[v], c.basis, gen);
      val += 2.0 * (iu * dot_noconj(g.slot_forms[circuit_id][v], tpsi)).real();
    }
    return val;
  }

  // ---- metrics ------------------------------------------------------------

  double infidelity_of(const std::vector<cdouble>& c) const {
    const double n2 = detail::sector_inner(c, c).real();
    double overlap2 = 0.0;
    if (oracle.degenerate && !oracle.degenerate_space.empty()) {
      for (const auto& vec : oracle.degenerate_space) {
        cdouble o{0.0, 0.0};
        for (std::size_t i = 0; i < c.size(); ++i) o += vec[i] * c[i];
        overlap2 += std::norm(o);
      }
    } else {
      cdouble o{0.0, 0.0};
      for (std::size_t i = 0; i < c.size(); ++i) o += oracle.coeffs[i] * c[i];
      overlap2 = std::norm(o);
    }
    return 1.0 - overlap2 / n2;
  }

  double eps_e_of(double energy) const {
    if (oracle.energy == 0.0) throw std::runtime_error("relative energy error undefined at E = 0");
    return std::abs(energy - oracle.energy) / std::abs(oracle.energy);
  }

  // ---- calibration --------------------------------------------------------

  // Fix each derived term's sign by assembling it from the transformed oracle
  // Schmidt factors of its source and matching the oracle state. Calibrating
  // on the initial determinants instead would pick up the common factor
  // sign(u[d_A] v[d_B]), which mis-signs every partner at once and leaves the
  // degenerate cluster unable to align; the factor route is free of it.
  void calibrate() {
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (!terms[t].derived) continue;
      terms[t].calib = int(oracle_factor_sign(int(t)));
    }
  }

  double oracle_factor_sign(int t) {
    const Term& term = terms[t];
    cdouble acc{0.0, 0.0};
    // Assemble this single term from the source oracle Schmidt factors.
    std::array<std::vector<cdouble>, 2> mats;
    for (int side = 0; side < n_sides; ++side) {
      const SideFactor& f = term.sides[side];
      const auto& sch = kept_schmidt[term.source];
      const auto& vec = (f.source_side == 0) ? sch.vec_a : sch.vec_b;
      std::vector<cdouble> src(vec.begin(), vec.end());
      if (f.transform < 0) {
        mats[side] = std::move(src);
      } else {
        mats[side].assign(f.mat_basis.dim(), cdouble{0.0, 0.0});
        for (std::size_t i = 0; i < src.size(); ++i)
          mats[side][f.transform_map[i].first] += f.transform_map[i].second * src[i];
      }
    }
    for (std::size_t g = 0; g < global.dim(); ++g) {
      cdouble amp{1.0, 0.0};
      bool ok = true;
      for (int side = 0; side < n_sides; ++side) {
        const auto idx = term.sides[side].global_map[g];
        if (idx < 0) {
          ok = false;
          break;
        }
        amp *= mats[side][idx];
      }
      if (ok) acc += oracle.coeffs[g] * amp;
    }
    return acc.real() >= 0.0 ? 1.0 : -1.0;
  }

  // ---- loop ---------------------------------------------------------------

  void push_record_zero() {
    refresh_states();
    const auto c = assemble_raw();
    IterationRecord rec;
    rec.iter = 0;
    rec.energy = energy_of(c);
    rec.infidelity = infidelity_of(c);
    rec.eps_e = eps_e_of(rec.energy);
    rec.max_gradient = 0.0;
    rec.cnot_per_circuit.assign(circuits.size(), 0);
    rec.cnot_max = 0;
    rec.wall_ms = 0;
    records.push_back(std::move(rec));
  }

  std::vector<long> cnots_per_circuit() const {
    std::vector<long> out;
    for (const auto& c : circuits) {
      long total = 0;
      for (const auto& op : c.ops) total += cnot_model.count(op);
      out.push_back(total);
    }
    return out;
  }

  int deepest_circuit() const {
    int best = 0;
    std::size_t best_ops = 0;
    long best_cnots = -1;
    const auto counts = cnots_per_circuit();
    for (std::size_t i = 0; i < circuits.size(); ++i) {
      if (circuits[i].ops.size() > best_ops ||
          (circuits[i].ops.size() == best_ops && counts[i] > best_cnots)) {
        best = int(i);
        best_ops = circuits[i].ops.size();
        best_cnots = counts[i];
      }
    }
    return best;
  }

  struct Candidate {
    int circuit;
    int pool_index;
  };

  std::vector<Candidate> candidate_list(int excluded) const {
    std::vector<Candidate> out;
    for (int ci = 0; ci < int(circuits.size()); ++ci) {
      if (ci == excluded) continue;
      for (int pi = 0; pi < int(circuits[ci].pool.size()); ++pi) out.push_back({ci, pi});
    }
    return out;
  }

  std::vector<double> scan(const Gradients& g, const std::vector<Candidate>& cands) const {
    std::vector<double> vals(cands.size(), 0.0);
    const int nthreads = std::max(1, opt.threads);
    if (nthreads == 1 || cands.size() < 32) {
      for (std::size_t i = 0; i < cands.size(); ++i)
        vals[i] =
            candidate_gradient_with_forms(g, cands[i].circuit, circuits[cands[i].circuit].pool[cands[i].pool_index]);
      return vals;
    }
    std::vector<std::thread> workers;
    std::size_t chunk = (cands.size() + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const std::size_t lo = t * chunk, hi = std::min(cands.size(), lo + chunk);
      if (lo >= hi) break;
      workers.emplace_back([&, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i)
          vals[i] = candidate_gradient_with_forms(g, cands[i].circuit,
                                                  circuits[cands[i].circuit].pool[cands[i].pool_index]);
      });
    }
    for (auto& w : workers) w.join();
    return vals;
  }

  // Free-parameter optimization with an index mask into [thetas | alphas | beta].
  double optimize(const std::vector<int>& free) {
    const std::size_t n_theta = thetas.size(), n_alpha = alphas.size();
    auto pack = [&] {
      std::vector<double> x;
      for (int idx : free) {
        if (idx < int(n_theta))
          x.push_back(thetas[idx]);
        else if (idx < int(n_theta + n_alpha))
          x.push_back(alphas[idx - n_theta]);
        else
          x.push_back(*beta);
      }
      return x;
    };
    auto unpack = [&](const std::vector<double>& x) {
      for (std::size_t i = 0; i < free.size(); ++i) {
        const int idx = free[i];
        if (idx < int(n_theta))
          thetas[idx] = x[i];
        else if (idx < int(n_theta + n_alpha))
          alphas[idx - n_theta] = x[i];
        else
          beta = x[i];
      }
    };
    auto objective = [&](const std::vector<double>& x, std::vector<double>& grad) {
      unpack(x);
      refresh_states();
      const Gradients g = gradients(true);
      grad.resize(free.size());
      for (std::size_t i = 0; i < free.size(); ++i) {
        const int idx = free[i];
        if (idx < int(n_theta))
          grad[i] = g.theta[idx];
        else if (idx < int(n_theta + n_alpha))
          grad[i] = g.alpha[idx - n_theta];
        else
          grad[i] = g.beta;
      }
      return g.energy;
    };
    auto result = minimize_bfgs(objective, pack(), opt.inner);
    unpack(result.x);
    refresh_states();
    return result.value;
  }

  std::vector<int> all_free_parameters() const {
    std::vector<int> free;
    for (std::size_t i = 0; i < thetas.size(); ++i) free.push_back(int(i));
    for (std::size_t i = 0; i < alphas.size(); ++i) free.push_back(int(thetas.size() + i));
    if (beta) free.push_back(int(thetas.size() + alphas.size()));
    return free;
  }

  bool step() {
    if (stopped) return false;
    if (factors_overridden)
      throw std::runtime_error("cannot iterate after overriding factor states");
    const auto t_start = std::chrono::steady_clock::now();
    const int iter = int(records.size());  // records[0] is the reference

    if (iter > opt.max_iterations) {
      stop("max_iterations");
      return false;
    }

    // Plain runs stop once the infidelity threshold is met.
    if (opt.cuts == 0 && records.back().infidelity < opt.infidelity_stop) {
      stop("infidelity");
      return false;
    }
    if (opt.cuts > 0 && schmidt_bound > 0.0 &&
        records.back().infidelity <= schmidt_bound * (1.0 + opt.bound_tolerance)) {
      stop("schmidt_bound");
      return false;
    }

    refresh_states();
    const Gradients g = gradients(false);

    int excluded = -1;
    if (opt.circuit_exclusion_period > 0 && iter % opt.circuit_exclusion_period == 0 &&
        circuits.size() > 1)
      excluded = deepest_circuit();
    const auto cands = candidate_list(excluded);
    const auto vals = scan(g, cands);

    double best_val = 0.0;
    int best = -1;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (std::abs(vals[i]) > std::abs(best_val) + 1e-10 ||
          (best < 0 && std::abs(vals[i]) > 0.0)) {
        best_val = vals[i];
        best = int(i);
      }
    }
    const double max_grad = best >= 0 ? std::abs(best_val) : 0.0;
    if (best < 0 || max_grad < opt.grad_stop) {
      stop("gradient");
      return false;
    }

    // Append the winner with its parameter at zero, then optimize.
    const auto& cand = cands[best];
    Circuit& circ = circuits[cand.circuit];
    circ.ops.push_back(circ.pool[cand.pool_index]);
    circ.param_index.push_back(int(thetas.size()));
    thetas.push_back(0.0);

    const double warm_energy = records.back().energy;
    const bool full = (opt.lazy_full_update_interval <= 1) ||
                      (iter % opt.lazy_full_update_interval == 0);
    std::vector<int> free;
    if (full)
      free = all_free_parameters();
    else
      free = {int(thetas.size()) - 1};
    const double energy = optimize(free);
    if (energy > warm_energy + 1e-9) {
      stop("optimizer_divergence");
      std::cerr << "warning: optimizer diverged at iteration " << iter << " (" << energy << " > "
                << warm_energy << ")\n";
      return false;
    }

    const auto c = assemble_raw();
    const double norm_dev = std::abs(detail::sector_norm(c) - 1.0);
    if (norm_dev > tol::assembled_norm_hard)
      throw std::runtime_error("assembled state lost normalization: deviation " +
                               std::to_string(norm_dev));

    IterationRecord rec;
    rec.iter = iter;
    rec.energy = energy;
    rec.infidelity = infidelity_of(c);
    rec.eps_e = eps_e_of(energy);
    rec.max_gradient = max_grad;
    rec.circuit_id = cand.circuit;
    rec.generator_id = cand.pool_index;
    rec.cnot_per_circuit = cnots_per_circuit();
    rec.cnot_max = *std::max_element(rec.cnot_per_circuit.begin(), rec.cnot_per_circuit.end());
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t_start)
                      .count();
    records.push_back(std::move(rec));

    if (int(records.size()) - 1 >= opt.max_iterations) stop("max_iterations");
    if (opt.cuts == 0 && records.back().infidelity < opt.infidelity_stop) stop("infidelity");
    if (opt.cuts > 0 && schmidt_bound > 0.0 &&
        records.back().infidelity <= schmidt_bound * (1.0 + opt.bound_tolerance))
      stop("schmidt_bound");
    return !stopped;
  }

  void stop(const std::string& reason) {
    stopped = true;
    stop_reason = reason;
  }

  // ---- misc ---------------------------------------------------------------

  double max_term_overlap() {
    refresh_states();
    double worst = 0.0;
    for (std::size_t a = 0; a < terms.size(); ++a) {
      for (std::size_t b = a + 1; b < terms.size(); ++b) {
        cdouble prod{1.0, 0.0};
        for (int side = 0; side < n_sides; ++side) {
          const SideFactor& fa = terms[a].sides[side];
          const SideFactor& fb = terms[b].sides[side];
          cdouble o{0.0, 0.0};
          // Overlap in the shared sector, zero otherwise.
          for (std::size_t i = 0; i < fa.mat_basis.dim(); ++i) {
            const auto j = fb.mat_basis.index_of(fa.mat_basis.dets[i]);
            if (j >= 0) o += std::conj(fa.mat[i]) * fb.mat[j];
          }
          prod *= o;
        }
        worst = std::max(worst, std::abs(prod));
      }
    }
    return worst;
  }

  void override_factors_from_oracle() {
    if (opt.cuts != 1)
      throw std::runtime_error("oracle factor override is defined for single-cut forging");
    for (auto& c : circuits) c.slot_states.assign(c.init_dets.size(), {});
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (terms[t].derived) continue;
      const auto& sch = kept_schmidt[t];
      for (int side = 0; side < 2; ++side) {
        const auto& comp = terms[t].sides[side].components[0];
        Circuit& circ = circuits[comp.slots[0].first];
        const auto& vec = (side == 0) ? sch.vec_a : sch.vec_b;
        auto& st = circ.slot_states[comp.slots[0].second];
        st.assign(circ.basis.dim(), cdouble{0.0, 0.0});
        for (std::size_t i = 0; i < vec.size(); ++i) st[i] = vec[i];
      }
    }
    factors_overridden = true;
    materialize();
    calibrate();
    materialize();
  }
};

// ---------------------------------------------------------------------------

Engine::Engine(const Model& model, const GlobalSector& sector, const EngineOptions& options)
    : impl_(std::make_unique<Impl>(model, sector, options)) {}
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;
Engine::~Engine() = default;

bool Engine::step() { return impl_->step(); }

void Engine::run() {
  while (impl_->step()) {
  }
}

const std::vector<IterationRecord>& Engine::records() const { return impl_->records; }
bool Engine::stopped() const { return impl_->stopped; }
const std::string& Engine::stop_reason() const { return impl_->stop_reason; }

double Engine::current_energy() const { return impl_->records.back().energy; }
double Engine::current_infidelity() const { return impl_->records.back().infidelity; }
double Engine::current_eps_e() const { return impl_->records.back().eps_e; }
double Engine::schmidt_bound() const { return impl_->schmidt_bound; }
double Engine::oracle_energy() const { return impl_->oracle.energy; }
const GroundStateResult& Engine::oracle_result() const { return impl_->oracle; }
const SectorBasis& Engine::global_basis() const { return impl_->global; }

int Engine::n_circuits() const { return int(impl_->circuits.size()); }

SubcircuitView Engine::circuit(int id) const {
  if (id < 0 || id >= int(impl_->circuits.size()))
    throw std::out_of_range("circuit id out of range");
  const auto& c = impl_->circuits[id];
  return {c.leaf, impl_->leaves[c.leaf].range, c.pool, c.ops, c.param_index, c.init_dets};
}

std::vector<ForgedTermView> Engine::terms() const {
  std::vector<ForgedTermView> out;
  for (const auto& t : impl_->terms)
    out.push_back({t.cluster, impl_->lambda_of(t.cluster), t.calib, t.derived, t.transform});
  return out;
}

long Engine::max_circuit_cnots() const {
  const auto counts = impl_->cnots_per_circuit();
  return *std::max_element(counts.begin(), counts.end());
}

std::vector<long> Engine::per_circuit_cnots() const { return impl_->cnots_per_circuit(); }

std::vector<cdouble> Engine::assembled() const {
  impl_->refresh_states();
  auto c = impl_->assemble_raw();
  const double n = detail::sector_norm(c);
  for (auto& x : c) x /= n;
  return c;
}

Statevector Engine::assembled_register() const {
  const auto c = assembled();
  return embed_in_register(impl_->global, std::span<const cdouble>(c.data(), c.size()));
}

double Engine::candidate_gradient(int circuit_id, const ExcitationGenerator& gen) const {
  if (circuit_id < 0 || circuit_id >= int(impl_->circuits.size()))
    throw std::out_of_range("candidate_gradient: circuit id out of range");
  impl_->refresh_states();
  const auto g = impl_->gradients(false);
  return impl_->candidate_gradient_with_forms(g, circuit_id, gen);
}

double Engine::max_term_overlap() const { return impl_->max_term_overlap(); }

void Engine::set_factors_from_oracle() { impl_->override_factors_from_oracle(); }

EngineSnapshot Engine::snapshot() const {
  EngineSnapshot s;
  for (const auto& c : impl_->circuits) s.circuits.push_back({c.ops, c.param_index, c.init_dets});
  s.thetas = impl_->thetas;
  s.alphas = impl_->alphas;
  s.beta = impl_->beta;
  s.cluster_lambdas = impl_->cluster_lambda;
  for (const auto& t : impl_->terms) s.calibration_signs.push_back(t.calib);
  s.records = impl_->records;
  s.stop_reason = impl_->stop_reason;
  return s;
}

void Engine::restore(const EngineSnapshot& snap) {
  if (snap.circuits.size() != impl_->circuits.size())
    throw std::runtime_error("snapshot does not match the engine structure");
  for (std::size_t i = 0; i < snap.circuits.size(); ++i) {
    if (!snap.circuits[i].init_dets.empty() &&
        snap.circuits[i].init_dets != impl_->circuits[i].init_dets)
      throw std::runtime_error("snapshot reference determinants do not match this model/config");
    impl_->circuits[i].ops = snap.circuits[i].ops;
    impl_->circuits[i].param_index = snap.circuits[i].param_index;
  }
  if (!snap.cluster_lambdas.empty() && snap.cluster_lambdas != impl_->cluster_lambda)
    throw std::runtime_error("snapshot coefficients do not match this model/config");
  impl_->thetas = snap.thetas;
  impl_->alphas = snap.alphas;
  impl_->beta = snap.beta;
  if (snap.calibration_signs.size() != impl_->terms.size())
    throw std::runtime_error("snapshot calibration signs do not match the term count");
  for (std::size_t i = 0; i < impl_->terms.size(); ++i)
    impl_->terms[i].calib = snap.calibration_signs[i];
  impl_->records = snap.records;
  impl_->stop_reason = snap.stop_reason;
  impl_->stopped = !snap.stop_reason.empty();
  // An iteration cap is a property of the run, not the state: resuming under
  // a larger budget continues the trace.
  if (snap.stop_reason == "max_iterations" &&
      int(snap.records.size()) - 1 < impl_->opt.max_iterations) {
    impl_->stopped = false;
    impl_->stop_reason.clear();
  }
  impl_->factors_overridden = false;
  impl_->refresh_states();
}

RunResult summarize(const Engine& engine) {
  RunResult r;
  r.records = engine.records();
  r.stop_reason = engine.stop_reason();
  r.final_energy = engine.current_energy();
  r.final_infidelity = engine.current_infidelity();
  r.final_eps_e = engine.current_eps_e();
  r.oracle_energy = engine.oracle_energy();
  r.schmidt_bound = engine.schmidt_bound();
  const int n_it = int(r.records.size()) - 1;
  r.rate = convergence_rate(r.final_infidelity, n_it);
  int max_width = 0;
  for (int i = 0; i < engine.n_circuits(); ++i)
    max_width = std::max(max_width, engine.circuit(i).range.width());
  r.n_qubits_per_circuit = max_width;
  return r;
}

RunResult run_adapt(const Model& model, const GlobalSector& sector, EngineOptions options) {
  options.cuts = 0;
  Engine engine(model, sector, options);
  engine.run();
  return summarize(engine);
}

RunResult run_edef(const Model& model, int cuts, const GlobalSector& sector,
                   EngineOptions options) {
  if (cuts < 1) throw std::invalid_argument("run_edef needs at least one cut");
  options.cuts = cuts;
  Engine engine(model, sector, options);
  engine.run();
  return summarize(engine);
}

}  // namespace fvqe
