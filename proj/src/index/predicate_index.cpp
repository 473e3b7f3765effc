#include "qshare/index/predicate_index.hpp"

#include <algorithm>
#include <set>

#include "qshare/core/error.hpp"
#include "qshare/dq/operators.hpp"

namespace qshare::index {

using ir::Atom;
using ir::CompareOp;

int Cut::compare(const Cut& a, const Cut& b) {
  int c = qshare::compare(a.value, b.value);
  if (c != 0) return c;
  return static_cast<int>(a.after) - static_cast<int>(b.after);
}

bool Cut::left_of(const Value& x) const {
  int c = qshare::compare(x, value);
  return after ? c <= 0 : c < 0;
}

bool QueryInterval::contains(const Value& x) const {
  if (x.is_null()) return false;
  if (lower && lower->left_of(x)) return false;
  if (upper && !upper->left_of(x)) return false;
  return true;
}

bool QueryInterval::empty() const { return lower && upper && Cut::compare(*lower, *upper) >= 0; }

std::vector<QueryInterval> IntervalSet::intervals(const ColumnRef& attribute) const {
  std::vector<QueryInterval> out;
  for (const auto& b : boxes) {
    auto it = b.ranges.find(attribute);
    if (it != b.ranges.end()) out.push_back(it->second);
  }
  return out;
}

std::size_t IntervalSet::distinct_cuts(const ColumnRef& attribute) const {
  std::set<Cut, CutLess> cuts;
  for (const auto& iv : intervals(attribute)) {
    if (iv.lower) cuts.insert(*iv.lower);
    if (iv.upper) cuts.insert(*iv.upper);
  }
  return cuts.size();
}

std::optional<std::string> next_prefix(const std::string& p) {
  std::string s = p;
  while (!s.empty()) {
    // decode the final UTF-8 code point
    std::size_t start = s.size() - 1;
    while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
    std::string tail = s.substr(start);
    std::uint32_t cp = 0;
    auto lead = static_cast<unsigned char>(tail[0]);
    std::size_t len = tail.size();
    if (len == 1 && lead < 0x80) {
      cp = lead;
    } else if (len == 2 && (lead & 0xE0) == 0xC0) {
      cp = ((lead & 0x1FU) << 6) | (static_cast<unsigned char>(tail[1]) & 0x3FU);
    } else if (len == 3 && (lead & 0xF0) == 0xE0) {
      cp = ((lead & 0x0FU) << 12) | ((static_cast<unsigned char>(tail[1]) & 0x3FU) << 6) |
           (static_cast<unsigned char>(tail[2]) & 0x3FU);
    } else if (len == 4 && (lead & 0xF8) == 0xF0) {
      cp = ((lead & 0x07U) << 18) | ((static_cast<unsigned char>(tail[1]) & 0x3FU) << 12) |
           ((static_cast<unsigned char>(tail[2]) & 0x3FU) << 6) | (static_cast<unsigned char>(tail[3]) & 0x3FU);
    } else {
      // not valid UTF-8: fall back to byte increment
      auto last = static_cast<unsigned char>(s.back());
      s.pop_back();
      if (last == 0xFF) continue;
      s.push_back(static_cast<char>(last + 1));
      return s;
    }
    s.erase(start);
    ++cp;
    if (cp == 0xD800) cp = 0xE000;
    if (cp > 0x10FFFF) continue;
    if (cp < 0x80) {
      s.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      s.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      s.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      s.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      s.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      s.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      s.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return s;
  }
  return std::nullopt;
}

namespace {

void tighten(QueryInterval& iv, std::optional<Cut> lower, std::optional<Cut> upper) {
  if (lower && (!iv.lower || Cut::compare(*lower, *iv.lower) > 0)) iv.lower = lower;
  if (upper && (!iv.upper || Cut::compare(*upper, *iv.upper) < 0)) iv.upper = upper;
}

/// Interval bounds for an atom, or nullopt when it cannot be indexed. `residual` is set when
/// the interval over-approximates the atom.
bool atom_bounds(const Atom& a, std::optional<Cut>& lower, std::optional<Cut>& upper, bool& residual) {
  residual = false;
  const Value& v = a.operands.empty() ? Value() : a.operands[0].value;
  switch (a.op) {
    case CompareOp::Eq: lower = Cut::before_value(v); upper = Cut::after_value(v); return true;
    case CompareOp::Lt: upper = Cut::before_value(v); return true;
    case CompareOp::Le: upper = Cut::after_value(v); return true;
    case CompareOp::Gt: lower = Cut::after_value(v); return true;
    case CompareOp::Ge: lower = Cut::before_value(v); return true;
    case CompareOp::Between:
      lower = Cut::before_value(v);
      upper = Cut::after_value(a.operands[1].value);
      return true;
    case CompareOp::Like: {
      if (!v.is_string()) return false;
      const std::string& pat = v.as_string();
      auto pos = pat.find_first_of("%_");
      if (pos == std::string::npos) {
        lower = Cut::before_value(v);
        upper = Cut::after_value(v);
        return true;
      }
      if (pos == 0) return false;
      std::string prefix = pat.substr(0, pos);
      lower = Cut::before_value(Value(prefix));
      if (auto next = next_prefix(prefix)) upper = Cut::before_value(Value(*next));
      residual = pat != prefix + "%";
      return true;
    }
    case CompareOp::Ne:
    case CompareOp::In: return false;
  }
  return false;
}

}  // namespace

IntervalSet to_intervals(const std::vector<ir::PredicateNF>& preds) {
  IntervalSet out;
  out.report.queries.resize(preds.size());
  for (std::size_t qi = 0; qi < preds.size(); ++qi) {
    auto q = static_cast<std::uint32_t>(qi + 1);
    auto& rep = out.report.queries[qi];
    for (const auto& conj : preds[qi].disjuncts) {
      // expand IN lists into alternatives
      std::vector<std::vector<Atom>> variants{{}};
      for (const auto& a : conj.atoms) {
        if (a.op == CompareOp::In) {
          std::vector<std::vector<Atom>> next;
          for (const auto& v : variants) {
            for (const auto& c : a.operands) {
              auto copy = v;
              copy.push_back(Atom{a.column, CompareOp::Eq, {c}});
              next.push_back(std::move(copy));
            }
          }
          variants = std::move(next);
        } else {
          for (auto& v : variants) v.push_back(a);
        }
        std::optional<Cut> lo, hi;
        bool residual = false;
        Atom probe = a.op == CompareOp::In ? Atom{a.column, CompareOp::Eq, {a.operands[0]}} : a;
        if (atom_bounds(probe, lo, hi, residual)) rep.indexable.push_back(a);
        else rep.non_indexable.push_back(a);
      }
      for (const auto& atoms : variants) {
        Box box;
        box.query = q;
        bool empty = false;
        for (const auto& a : atoms) {
          std::optional<Cut> lo, hi;
          bool residual = false;
          if (!atom_bounds(a, lo, hi, residual)) {
            box.residual.push_back(a);
            continue;
          }
          if (residual) box.residual.push_back(a);
          auto [it, fresh] = box.ranges.try_emplace(a.column);
          if (fresh) {
            it->second.query = q;
            it->second.attribute = a.column;
          }
          tighten(it->second, lo, hi);
          if (it->second.empty()) empty = true;
        }
        if (!empty) out.boxes.push_back(std::move(box));
      }
    }
  }
  out.report.attribute_order = default_attribute_order(out);
  return out;
}

std::vector<ColumnRef> default_attribute_order(const IntervalSet& set) {
  std::set<ColumnRef> attrs;
  for (const auto& b : set.boxes) {
    for (const auto& [attr, iv] : b.ranges) attrs.insert(attr);
  }
  std::vector<std::pair<std::size_t, ColumnRef>> ranked;
  for (const auto& a : attrs) ranked.emplace_back(set.distinct_cuts(a), a);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  std::vector<ColumnRef> out;
  for (auto& r : ranked) out.push_back(r.second);
  return out;
}

namespace {

struct Region {
  std::optional<Cut> lo;
  std::optional<Cut> hi;
};

bool overlaps(const QueryInterval& iv, const Region& r) {
  std::optional<Cut> lo = iv.lower;
  if (r.lo && (!lo || Cut::compare(*r.lo, *lo) > 0)) lo = r.lo;
  std::optional<Cut> hi = iv.upper;
  if (r.hi && (!hi || Cut::compare(*r.hi, *hi) < 0)) hi = r.hi;
  return !lo || !hi || Cut::compare(*lo, *hi) < 0;
}

bool strictly_inside(const Cut& c, const Region& r) {
  if (r.lo && Cut::compare(*r.lo, c) >= 0) return false;
  if (r.hi && Cut::compare(c, *r.hi) >= 0) return false;
  return true;
}

class Builder {
 public:
  Builder(const IntervalSet& set, const std::vector<ColumnRef>& order) : set_(set), order_(order) {}

  std::unique_ptr<IndexNode> build(const std::vector<std::size_t>& alive, std::map<ColumnRef, Region>& region) {
    for (const auto& attr : order_) {
      std::set<Cut, CutLess> cuts;
      const Region& r = region[attr];
      for (auto b : alive) {
        auto it = set_.boxes[b].ranges.find(attr);
        if (it == set_.boxes[b].ranges.end()) continue;
        const auto& iv = it->second;
        if (iv.lower && strictly_inside(*iv.lower, r)) cuts.insert(*iv.lower);
        if (iv.upper && strictly_inside(*iv.upper, r)) cuts.insert(*iv.upper);
      }
      if (cuts.empty()) continue;
      auto median_it = cuts.begin();
      std::advance(median_it, (cuts.size() - 1) / 2);
      Cut median = *median_it;

      if (++nodes_ > kMaxNodes) throw PlanError("predicate index exceeds " + std::to_string(kMaxNodes) + " nodes");
      auto node = std::make_unique<IndexNode>();
      node->is_leaf = false;
      node->attribute = attr;
      node->cut = median;
      Region saved = r;

      region[attr] = Region{saved.lo, median};
      node->left = build(filter(alive, attr, region[attr]), region);
      region[attr] = Region{median, saved.hi};
      node->right = build(filter(alive, attr, region[attr]), region);
      region[attr] = saved;
      return node;
    }
    return make_leaf(alive);
  }

 private:
  std::vector<std::size_t> filter(const std::vector<std::size_t>& alive, const ColumnRef& attr,
                                  const Region& r) const {
    std::vector<std::size_t> out;
    for (auto b : alive) {
      auto it = set_.boxes[b].ranges.find(attr);
      if (it == set_.boxes[b].ranges.end() || overlaps(it->second, r)) out.push_back(b);
    }
    return out;
  }

  std::unique_ptr<IndexNode> make_leaf(const std::vector<std::size_t>& alive) const {
    auto node = std::make_unique<IndexNode>();
    std::set<std::uint32_t> known;
    std::map<std::uint32_t, ir::PredicateNF> fallback;
    for (auto b : alive) {
      const auto& box = set_.boxes[b];
      if (box.residual.empty()) known.insert(box.query);
      else fallback[box.query].disjuncts.push_back(ir::Conjunction{box.residual});
    }
    node->leaf.known.assign(known.begin(), known.end());
    for (auto& [q, pred] : fallback) {
      if (!known.count(q)) node->leaf.fallback.emplace_back(q, std::move(pred));
    }
    return node;
  }

  static constexpr std::size_t kMaxNodes = 1 << 16;
  const IntervalSet& set_;
  const std::vector<ColumnRef>& order_;
  std::size_t nodes_ = 0;
};

}  // namespace

PredicateIndexTree build_index_tree(const IntervalSet& set, std::vector<ColumnRef> attr_order,
                                    std::size_t batch_size) {
  bool any = std::any_of(set.boxes.begin(), set.boxes.end(), [](const Box& b) { return !b.ranges.empty(); });
  if (!any) throw PlanError("no indexable predicate; use linear evaluation");
  for (const auto& b : set.boxes) {
    for (const auto& [attr, iv] : b.ranges) {
      if (std::find(attr_order.begin(), attr_order.end(), attr) == attr_order.end()) {
        throw PlanError("attribute order is missing indexed column " + attr.qualified());
      }
    }
  }
  PredicateIndexTree tree;
  tree.attribute_order = attr_order;
  tree.batch_size = batch_size;
  std::vector<std::size_t> alive(set.boxes.size());
  for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
  std::map<ColumnRef, Region> region;
  Builder builder(set, tree.attribute_order);
  tree.root = builder.build(alive, region);
  return tree;
}

PredicateIndexTree build_index_tree(const std::vector<ir::PredicateNF>& preds) {
  auto set = to_intervals(preds);
  auto order = set.report.attribute_order;
  return build_index_tree(set, order, preds.size());
}

std::vector<std::uint32_t> eval_tree(const PredicateIndexTree& tree, const Row& row, const dq::Schema& schema) {
  const IndexNode* n = tree.root.get();
  while (!n->is_leaf) {
    auto idx = schema.find(n->attribute);
    if (!idx) throw PlanError("row lacks indexed attribute " + n->attribute.qualified());
    const Value& v = row[*idx];
    if (v.is_null()) throw PlanError("NULL value in indexed attribute " + n->attribute.qualified());
    n = n->cut.left_of(v) ? n->left.get() : n->right.get();
  }
  std::vector<std::uint32_t> out = n->leaf.known;
  for (const auto& [q, pred] : n->leaf.fallback) {
    if (dq::eval_predicate(pred, row, schema)) out.push_back(q);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> eval_linear(const std::vector<ir::PredicateNF>& preds, const Row& row,
                                       const dq::Schema& schema) {
  std::vector<std::uint32_t> out;
  for (std::size_t q = 0; q < preds.size(); ++q) {
    if (dq::eval_predicate(preds[q], row, schema)) out.push_back(static_cast<std::uint32_t>(q + 1));
  }
  return out;
}

namespace {

std::string condition(const IndexNode& n, const RenderStyle& style) {
  return style.column(n.attribute) + (n.cut.after ? " <= " : " < ") + n.cut.value.to_sql();
}

std::string mask_literal(std::uint64_t mask) { return Value(static_cast<std::int64_t>(mask)).to_sql(); }

std::string leaf_sql(const IndexLeaf& leaf, const RenderStyle& style) {
  auto pred_sql = [&](const ir::PredicateNF& p) {
    return style.predicate ? style.predicate(p) : ir::unparse_predicate(p);
  };
  if (style.bitmask) {
    std::uint64_t mask = 0;
    for (auto q : leaf.known) mask |= std::uint64_t{1} << (q - 1);
    if (leaf.fallback.empty()) return mask_literal(mask);
    std::string out = "(" + mask_literal(mask);
    for (const auto& [q, pred] : leaf.fallback) {
      out += " " + style.bit_or + " CASE WHEN " + pred_sql(pred) + " THEN " +
             mask_literal(std::uint64_t{1} << (q - 1)) + " ELSE 0 END";
    }
    return out + ")";
  }
  if (leaf.fallback.empty()) {
    if (leaf.known.empty()) return style.empty_array;
    std::string out = style.array_open;
    for (std::size_t i = 0; i < leaf.known.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(leaf.known[i]);
    }
    return out + style.array_close;
  }
  std::string out = style.remove_fn + "(" + style.array_open;
  bool first = true;
  for (auto q : leaf.known) {
    if (!first) out += ",";
    out += std::to_string(q);
    first = false;
  }
  for (const auto& [q, pred] : leaf.fallback) {
    if (!first) out += ",";
    out += "CASE WHEN " + pred_sql(pred) + " THEN " + std::to_string(q) + " ELSE 0 END";
    first = false;
  }
  return out + style.array_close + ", 0)";
}

void render_node(const IndexNode& n, const RenderStyle& style, std::size_t indent, std::string& out) {
  if (n.is_leaf) {
    out += leaf_sql(n.leaf, style);
    return;
  }
  std::string pad(indent, ' ');
  std::string inner(indent + 4, ' ');
  out += "CASE WHEN " + condition(n, style) + " THEN";
  if (n.left->is_leaf) {
    out += " ";
    render_node(*n.left, style, indent + 4, out);
  } else {
    out += "\n" + inner;
    render_node(*n.left, style, indent + 4, out);
  }
  out += "\n" + pad + "ELSE";
  if (n.right->is_leaf) {
    out += " ";
    render_node(*n.right, style, indent + 4, out);
    out += " END";
  } else {
    out += "\n" + inner;
    render_node(*n.right, style, indent + 4, out);
    out += "\n" + pad + "END";
  }
}

void dump_node(const IndexNode& n, std::size_t depth, std::string& out) {
  std::string pad(depth * 2, ' ');
  if (n.is_leaf) {
    out += pad + "leaf [";
    for (std::size_t i = 0; i < n.leaf.known.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(n.leaf.known[i]);
    }
    out += "]";
    for (const auto& [q, pred] : n.leaf.fallback) {
      out += " check q" + std::to_string(q) + ": " + ir::unparse_predicate(pred);
    }
    out += "\n";
    return;
  }
  out += pad + "split " + n.attribute.qualified() + (n.cut.after ? " <= " : " < ") + n.cut.value.to_sql() + "\n";
  dump_node(*n.left, depth + 1, out);
  dump_node(*n.right, depth + 1, out);
}

void stats_node(const IndexNode& n, std::size_t depth, TreeStats& s) {
  ++s.node_count;
  if (n.is_leaf) {
    ++s.leaf_count;
    s.max_comparisons = std::max(s.max_comparisons, depth);
    return;
  }
  stats_node(*n.left, depth + 1, s);
  stats_node(*n.right, depth + 1, s);
}

}  // namespace

std::string render_tree(const PredicateIndexTree& tree, const RenderStyle& style) {
  std::string out;
  render_node(*tree.root, style, 0, out);
  return out;
}

std::string render_tree_column(const PredicateIndexTree& tree, const RenderStyle& style, const std::string& alias) {
  return "(" + render_tree(tree, style) + ") AS " + alias;
}

std::string debug_dump(const PredicateIndexTree& tree) {
  std::string out;
  dump_node(*tree.root, 0, out);
  return out;
}

TreeStats tree_stats(const PredicateIndexTree& tree, const RenderStyle& style) {
  TreeStats s;
  stats_node(*tree.root, 0, s);
  s.estimated_bytes = render_tree(tree, style).size();
  return s;
}

}  // namespace qshare::index
