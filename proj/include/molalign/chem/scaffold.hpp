#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "molalign/chem/molecule.hpp"
#include "molalign/util/sha256.hpp"

namespace molalign::chem {

// Ring-and-linker skeleton left after iteratively deleting degree-1 atoms.
// Acyclic molecules prune away completely and share the empty scaffold.
struct ScaffoldGraph {
  struct Node {
    std::string element;
    bool aromatic = false;
    int formal_charge = 0;
  };
  struct Edge {
    int a = 0;
    int b = 0;
    int order = 0; // 0 single, 1 double, 2 triple, 3 aromatic
  };
  std::vector<Node> nodes;
  std::vector<Edge> edges;
};

namespace detail {

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  // FNV-style fold, good enough for label refinement at molecule scale.
  std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
  h ^= value;
  h *= 1099511628211ull;
  return h;
}

inline ScaffoldGraph build_scaffold(const Molecule &mol) {
  std::size_t n = mol.atoms.size();
  std::vector<bool> alive(n, true);
  std::vector<int> deg(n, 0);
  for (const Bond &b : mol.bonds) {
    ++deg[static_cast<std::size_t>(b.a)];
    ++deg[static_cast<std::size_t>(b.b)];
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && deg[i] <= 1) {
        alive[i] = false;
        changed = true;
        for (const Bond &b : mol.bonds) {
          if (static_cast<std::size_t>(b.a) == i && alive[static_cast<std::size_t>(b.b)])
            --deg[static_cast<std::size_t>(b.b)];
          if (static_cast<std::size_t>(b.b) == i && alive[static_cast<std::size_t>(b.a)])
            --deg[static_cast<std::size_t>(b.a)];
        }
      }
    }
  }

  ScaffoldGraph g;
  std::vector<int> remap(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!alive[i])
      continue;
    remap[i] = static_cast<int>(g.nodes.size());
    ScaffoldGraph::Node node;
    node.element = mol.atoms[i].element;
    node.aromatic = mol.atoms[i].aromatic;
    node.formal_charge = mol.atoms[i].formal_charge;
    g.nodes.push_back(std::move(node));
  }
  for (const Bond &b : mol.bonds) {
    if (!alive[static_cast<std::size_t>(b.a)] || !alive[static_cast<std::size_t>(b.b)])
      continue;
    ScaffoldGraph::Edge edge;
    edge.a = remap[static_cast<std::size_t>(b.a)];
    edge.b = remap[static_cast<std::size_t>(b.b)];
    edge.order = static_cast<int>(b.order);
    if (edge.a > edge.b)
      std::swap(edge.a, edge.b);
    g.edges.push_back(edge);
  }
  return g;
}

class ScaffoldCanonicalizer {
public:
  explicit ScaffoldCanonicalizer(const ScaffoldGraph &g) : g_(g), adj_(g.nodes.size()) {
    for (std::size_t e = 0; e < g_.edges.size(); ++e) {
      adj_[static_cast<std::size_t>(g_.edges[e].a)].push_back(static_cast<int>(e));
      adj_[static_cast<std::size_t>(g_.edges[e].b)].push_back(static_cast<int>(e));
    }
  }

  std::string canonical_string() {
    if (g_.nodes.empty())
      return "";
    std::vector<std::uint64_t> labels(g_.nodes.size());
    for (std::size_t i = 0; i < g_.nodes.size(); ++i)
      labels[i] = initial_label(g_.nodes[i], static_cast<int>(adj_[i].size()));
    return canonical_from(labels);
  }

private:
  const ScaffoldGraph &g_;
  std::vector<std::vector<int>> adj_;

  static std::uint64_t initial_label(const ScaffoldGraph::Node &node, int degree) {
    std::uint64_t h = molalign::util::fnv1a64(node.element);
    h = hash_combine(h, node.aromatic ? 2 : 1);
    h = hash_combine(h, static_cast<std::uint64_t>(node.formal_charge + 16));
    h = hash_combine(h, static_cast<std::uint64_t>(degree));
    return h;
  }

  void refine(std::vector<std::uint64_t> &labels) const {
    std::size_t n = labels.size();
    std::size_t classes = count_classes(labels);
    for (std::size_t round = 0; round < n; ++round) {
      std::vector<std::uint64_t> next(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<int, std::uint64_t>> env;
        env.reserve(adj_[i].size());
        for (int e : adj_[i]) {
          const auto &edge = g_.edges[static_cast<std::size_t>(e)];
          int other = edge.a == static_cast<int>(i) ? edge.b : edge.a;
          env.emplace_back(edge.order, labels[static_cast<std::size_t>(other)]);
        }
        std::sort(env.begin(), env.end());
        std::uint64_t h = labels[i];
        for (const auto &[order, lab] : env) {
          h = hash_combine(h, static_cast<std::uint64_t>(order + 1));
          h = hash_combine(h, lab);
        }
        next[i] = h;
      }
      std::size_t next_classes = count_classes(next);
      labels.swap(next);
      if (next_classes == classes)
        break;
      classes = next_classes;
    }
  }

  static std::size_t count_classes(const std::vector<std::uint64_t> &labels) {
    std::vector<std::uint64_t> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    return sorted.size();
  }

  std::string canonical_from(std::vector<std::uint64_t> labels) const {
    refine(labels);

    // Group atoms by label; pick the lowest-label class that still has ties.
    std::map<std::uint64_t, std::vector<int>> classes;
    for (std::size_t i = 0; i < labels.size(); ++i)
      classes[labels[i]].push_back(static_cast<int>(i));
    for (const auto &[label, members] : classes) {
      if (members.size() > 1) {
        // Branch on each tied atom, keep the lexicographically smallest result.
        std::string best;
        bool have = false;
        for (int atom : members) {
          std::vector<std::uint64_t> branched = labels;
          branched[static_cast<std::size_t>(atom)] = hash_combine(label, 0x5f5f5f5full);
          std::string candidate = canonical_from(std::move(branched));
          if (!have || candidate < best) {
            best = std::move(candidate);
            have = true;
          }
        }
        return best;
      }
    }
    return serialize(labels);
  }

  std::string serialize(const std::vector<std::uint64_t> &labels) const {
    std::size_t n = labels.size();
    // Discrete partition: rank atoms by label value.
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i)
      order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)]; });
    std::vector<int> rank(n);
    for (std::size_t r = 0; r < n; ++r)
      rank[static_cast<std::size_t>(order[r])] = static_cast<int>(r);

    std::string out;
    for (std::size_t r = 0; r < n; ++r) {
      const auto &node = g_.nodes[static_cast<std::size_t>(order[r])];
      if (r)
        out.push_back(' ');
      out += node.aromatic ? lowercase(node.element) : node.element;
      if (node.formal_charge > 0)
        out += "+" + std::to_string(node.formal_charge);
      else if (node.formal_charge < 0)
        out += std::to_string(node.formal_charge);
    }
    std::vector<std::tuple<int, int, int>> edges;
    edges.reserve(g_.edges.size());
    for (const auto &edge : g_.edges) {
      int ra = rank[static_cast<std::size_t>(edge.a)];
      int rb = rank[static_cast<std::size_t>(edge.b)];
      if (ra > rb)
        std::swap(ra, rb);
      edges.emplace_back(ra, rb, edge.order);
    }
    std::sort(edges.begin(), edges.end());
    out.push_back('|');
    static const char *bond_glyph[] = {"-", "=", "#", ":"};
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto [ra, rb, order_idx] = edges[e];
      if (e)
        out.push_back(',');
      out += std::to_string(ra);
      out += bond_glyph[order_idx];
      out += std::to_string(rb);
    }
    return out;
  }

  static std::string lowercase(const std::string &s) {
    std::string out = s;
    for (char &c : out)
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  }
};

} // namespace detail

inline ScaffoldGraph murcko_scaffold(const Molecule &mol) { return detail::build_scaffold(mol); }

// Canonical grouping key: identical across atom orderings of the same
// scaffold, "" for acyclic molecules.
inline std::string scaffold_key(const Molecule &mol) {
  ScaffoldGraph g = detail::build_scaffold(mol);
  detail::ScaffoldCanonicalizer canon(g);
  return canon.canonical_string();
}

} // namespace molalign::chem
