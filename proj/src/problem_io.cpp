#include "hybrid/problem_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>

#include <json.hpp>

namespace hybrid {

using json = nlohmann::json;

namespace {

// Iterator over the raw text that publishes how far the parser has read.
class TrackingIterator {
 public:
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  TrackingIterator() = default;
  TrackingIterator(const char* p, const char** cursor) : p_(p), cursor_(cursor) {}

  reference operator*() const { return *p_; }
  TrackingIterator& operator++() {
    ++p_;
    *cursor_ = p_;
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator old = *this;
    ++*this;
    return old;
  }
  bool operator==(const TrackingIterator& o) const { return p_ == o.p_; }

 private:
  const char* p_ = nullptr;
  const char** cursor_ = nullptr;
};

// Builds the DOM and remembers the source line of every value by JSON pointer.
class LineRecorder {
 public:
  using number_integer_t = json::number_integer_t;
  using number_unsigned_t = json::number_unsigned_t;
  using number_float_t = json::number_float_t;
  using string_t = json::string_t;
  using binary_t = json::binary_t;

  LineRecorder(json& root, std::string_view text, const char** cursor)
      : dom_(root, true), text_(text), cursor_(cursor) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '\n') newlines_.push_back(i);
    }
  }

  std::map<std::string, std::size_t> lines;

  std::size_t current_line() const {
    const char* begin = text_.data();
    const char* p = *cursor_;
    if (p == nullptr || p == begin) return 1;
    --p;
    while (p > begin && std::isspace(static_cast<unsigned char>(*p))) --p;
    const auto offset = static_cast<std::size_t>(p - begin);
    return static_cast<std::size_t>(std::upper_bound(newlines_.begin(), newlines_.end(), offset) -
                                    newlines_.begin()) + 1;
  }

  bool null() { return scalar([&] { return dom_.null(); }); }
  bool boolean(bool v) { return scalar([&] { return dom_.boolean(v); }); }
  bool number_integer(number_integer_t v) { return scalar([&] { return dom_.number_integer(v); }); }
  bool number_unsigned(number_unsigned_t v) { return scalar([&] { return dom_.number_unsigned(v); }); }
  bool number_float(number_float_t v, const string_t& s) { return scalar([&] { return dom_.number_float(v, s); }); }
  bool string(string_t& v) { return scalar([&] { return dom_.string(v); }); }
  bool binary(binary_t& v) { return scalar([&] { return dom_.binary(v); }); }

  bool start_object(std::size_t n) {
    begin_value();
    frames_.push_back({false, {}, 0});
    return dom_.start_object(n);
  }
  bool key(string_t& k) {
    frames_.back().key = k;
    lines[path()] = current_line();
    return dom_.key(k);
  }
  bool end_object() {
    frames_.pop_back();
    end_value();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) {
    begin_value();
    frames_.push_back({true, {}, 0});
    return dom_.start_array(n);
  }
  bool end_array() {
    frames_.pop_back();
    end_value();
    return dom_.end_array();
  }
  template <typename Exception>
  bool parse_error(std::size_t pos, const std::string& token, const Exception& ex) {
    return dom_.parse_error(pos, token, ex);
  }

 private:
  struct Frame {
    bool array;
    std::string key;
    std::size_t index;
  };

  std::string path() const {
    std::string out;
    for (const auto& f : frames_) out += "/" + (f.array ? std::to_string(f.index) : f.key);
    return out;
  }
  void begin_value() { lines[path()] = current_line(); }
  void end_value() {
    if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
  }
  template <typename F>
  bool scalar(F f) {
    begin_value();
    const bool ok = f();
    end_value();
    return ok;
  }

  nlohmann::detail::json_sax_dom_parser<json> dom_;
  std::string_view text_;
  const char** cursor_;
  std::vector<std::size_t> newlines_;
  std::vector<Frame> frames_;
};

class Document {
 public:
  Document(std::string_view text, std::string source) : source_(std::move(source)) {
    const char* cursor = text.data();
    LineRecorder recorder(root_, text, &cursor);
    try {
      json::sax_parse(TrackingIterator(text.data(), &cursor), TrackingIterator(text.data() + text.size(), &cursor),
                      &recorder);
    } catch (const json::parse_error& e) {
      throw LoadError(source_, recorder.current_line(), "", std::string("parse error: ") + e.what());
    }
    lines_ = std::move(recorder.lines);
  }

  const json& root() const { return root_; }
  const std::string& source() const { return source_; }

  std::size_t line_of(std::string pointer) const {
    while (true) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      if (pointer.empty()) return 1;
      pointer.erase(pointer.rfind('/'));
    }
  }

  [[noreturn]] void fail(const std::string& pointer, const std::string& reason) const {
    throw LoadError(source_, line_of(pointer), pointer.empty() ? "/" : pointer, reason);
  }

 private:
  json root_;
  std::string source_;
  std::map<std::string, std::size_t> lines_;
};

class Node {
 public:
  Node(const Document& doc, const json& j, std::string ptr) : doc_(&doc), j_(&j), ptr_(std::move(ptr)) {}

  const std::string& pointer() const { return ptr_; }
  [[noreturn]] void fail(const std::string& reason) const { doc_->fail(ptr_, reason); }

  bool is_object() const { return j_->is_object(); }

  std::optional<Node> find(const std::string& key) const {
    require_object();
    auto it = j_->find(key);
    if (it == j_->end()) return std::nullopt;
    return Node(*doc_, *it, ptr_ + "/" + key);
  }
  Node operator[](const std::string& key) const {
    if (auto n = find(key)) return *n;
    fail("missing key '" + key + "'");
  }
  void only_keys(std::initializer_list<const char*> allowed) const {
    require_object();
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
        Node(*doc_, it.value(), ptr_ + "/" + it.key()).fail("unknown key '" + it.key() + "'");
      }
    }
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }
  Node at(std::size_t i) const {
    size();
    return Node(*doc_, (*j_)[i], ptr_ + "/" + std::to_string(i));
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }
  long long integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<long long>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  Vector vector(Index dim) const {
    const std::size_t n = size();
    if (static_cast<Index>(n) != dim) {
      fail("expected " + std::to_string(dim) + " entries, got " + std::to_string(n));
    }
    Vector v(dim);
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Index>(i)] = at(i).number();
    return v;
  }
  //! Row-major array of rows; `rows` < 0 accepts any row count.
  Matrix matrix(Index rows, Index cols) const {
    const std::size_t n = size();
    if (rows >= 0 && static_cast<Index>(n) != rows) {
      fail("expected " + std::to_string(rows) + " rows, got " + std::to_string(n));
    }
    Matrix m(static_cast<Index>(n), cols);
    for (std::size_t i = 0; i < n; ++i) m.row(static_cast<Index>(i)) = at(i).vector(cols).transpose();
    return m;
  }

  //! Runs `f`, reporting library validation errors at this node.
  template <typename F>
  auto guard(F f) const -> decltype(f()) {
    try {
      return f();
    } catch (const LoadError&) {
      throw;
    } catch (const ConfigError& e) {
      fail(e.what());
    } catch (const DimensionError& e) {
      fail(e.what());
    }
  }

 private:
  void require_object() const {
    if (!j_->is_object()) fail("expected an object");
  }

  const Document* doc_;
  const json* j_;
  std::string ptr_;
};

SpaceSpec parse_space(const Node& n) {
  n.only_keys({"kind", "dim", "p", "c"});
  const std::string kind = n["kind"].str();
  const long long dim = n["dim"].integer();
  if (dim < 1) n["dim"].fail("dimension must be at least 1");
  if (kind == "hilbert") {
    if (n.find("p") || n.find("c")) n.fail("a hilbert space takes no p or c");
    return SpaceSpec::hilbert(static_cast<Index>(dim));
  }
  if (kind != "lp") n["kind"].fail("space kind must be 'hilbert' or 'lp'");
  const double p = n["p"].number();
  std::optional<double> c;
  if (auto cn = n.find("c")) c = cn->number();
  return n.guard([&] { return SpaceSpec::lp(static_cast<Index>(dim), p, c); });
}

ConvexSet parse_set(const Node& n, Index dim) {
  const std::string type = n["type"].str();
  return n.guard([&]() -> ConvexSet {
    if (type == "whole") {
      n.only_keys({"type"});
      return ConvexSet::whole_space(dim);
    }
    if (type == "box") {
      n.only_keys({"type", "lower", "upper"});
      return ConvexSet::box(n["lower"].vector(dim), n["upper"].vector(dim));
    }
    if (type == "cube") {
      n.only_keys({"type", "lower", "upper"});
      return ConvexSet::cube(dim, n["lower"].number(), n["upper"].number());
    }
    if (type == "ball") {
      n.only_keys({"type", "center", "radius"});
      return ConvexSet::ball(n["center"].vector(dim), n["radius"].number());
    }
    if (type == "halfspace") {
      n.only_keys({"type", "a", "b"});
      return ConvexSet::halfspace(n["a"].vector(dim), n["b"].number());
    }
    if (type == "affine") {
      n.only_keys({"type", "A", "b"});
      const Matrix A = n["A"].matrix(-1, dim);
      return ConvexSet::affine(A, n["b"].vector(A.rows()));
    }
    if (type == "intersection") {
      n.only_keys({"type", "parts", "witness"});
      const Node parts = n["parts"];
      std::vector<ConvexSet> sets;
      for (std::size_t i = 0; i < parts.size(); ++i) sets.push_back(parse_set(parts.at(i), dim));
      std::optional<Vector> witness;
      if (auto w = n.find("witness")) witness = w->vector(dim);
      return ConvexSet::intersection(std::move(sets), std::move(witness));
    }
    n["type"].fail("unknown set type '" + type + "'");
  });
}

MonotoneMap parse_map(const Node& n, Index dim) {
  const std::string type = n["type"].str();
  return n.guard([&]() -> MonotoneMap {
    if (type == "zero") {
      n.only_keys({"type"});
      return MonotoneMap::zero(dim);
    }
    if (type == "affine") {
      n.only_keys({"type", "Q", "q"});
      return MonotoneMap::affine(n["Q"].matrix(dim, dim), n["q"].vector(dim));
    }
    if (type == "quadratic_gradient") {
      n.only_keys({"type", "H", "a"});
      return MonotoneMap::quadratic_gradient(n["H"].matrix(dim, dim), n["a"].vector(dim));
    }
    n["type"].fail("unknown map type '" + type + "'");
  });
}

FixedPointMap parse_fixed_point_map(const Node& n, Index dim) {
  const std::string type = n["type"].str();
  return n.guard([&]() -> FixedPointMap {
    if (type == "identity") {
      n.only_keys({"type"});
      return FixedPointMap::identity(dim);
    }
    if (type == "metric_projection") {
      n.only_keys({"type", "set"});
      return FixedPointMap::metric_projection(parse_set(n["set"], dim));
    }
    if (type == "generalized_projection") {
      n.only_keys({"type", "set"});
      return FixedPointMap::generalized_projection(parse_set(n["set"], dim));
    }
    if (type == "averaged") {
      n.only_keys({"type", "t", "inner"});
      return FixedPointMap::averaged(n["t"].number(), parse_fixed_point_map(n["inner"], dim));
    }
    if (type == "resolvent") {
      n.only_keys({"type", "map", "r"});
      return FixedPointMap::resolvent(parse_map(n["map"], dim), n["r"].number());
    }
    n["type"].fail("unknown map type '" + type + "'");
  });
}

Bifunction parse_bifunction(const Node& n, Index dim) {
  const std::string type = n["type"].str();
  return n.guard([&]() -> Bifunction {
    if (type == "zero") {
      n.only_keys({"type"});
      return Bifunction::zero(dim);
    }
    if (type == "vi") {
      n.only_keys({"type", "G"});
      return Bifunction::vi(parse_map(n["G"], dim));
    }
    if (type == "separable") {
      n.only_keys({"type", "H", "a"});
      return Bifunction::separable(n["H"].matrix(dim, dim), n["a"].vector(dim));
    }
    n["type"].fail("unknown bifunction type '" + type + "'");
  });
}

Schedule parse_schedule(const Node& n) {
  n.only_keys({"const", "list", "harmonic"});
  return n.guard([&]() -> Schedule {
    if (auto c = n.find("const")) return Schedule::constant(c->number());
    if (auto h = n.find("harmonic")) return Schedule::harmonic(h->number());
    if (auto l = n.find("list")) {
      std::vector<double> values;
      for (std::size_t i = 0; i < l->size(); ++i) values.push_back(l->at(i).number());
      return Schedule::list(std::move(values));
    }
    n.fail("a schedule is {\"const\": v}, {\"list\": [...]} or {\"harmonic\": s}");
  });
}

// Where in the file an instance-level condition lives.
std::string pointer_for(const std::string& message) {
  static const std::pair<const char*, const char*> table[] = {
      {"beta", "/families/beta"},     {"alpha", "/schedules/alpha"},  {"lambda", "/schedules/lambda"},
      {"r schedule", "/schedules/r"}, {"x0", "/x0"},                  {"known solution", "/known_solution"},
      {"anchor", "/anchor"},          {"the T family", "/families/T"}, {"an A family", "/families/A"},
  };
  for (const auto& [prefix, ptr] : table) {
    if (message.rfind(prefix, 0) == 0) return ptr;
  }
  return "";
}

bool all_B_zero(const ProblemInstance& inst) {
  return std::all_of(inst.eq.begin(), inst.eq.end(), [](const auto& e) { return e.B.is_zero(); });
}

bool all_f_zero(const ProblemInstance& inst) {
  return std::all_of(inst.eq.begin(), inst.eq.end(),
                     [](const auto& e) { return e.f.kind() == Bifunction::Kind::zero; });
}

Runner default_runner(const ProblemInstance& inst) {
  if (inst.eq.size() != 2) return Runner::theorem4;
  return inst.A.empty() ? Runner::theorem2 : Runner::theorem1;
}

}  // namespace

LoadError::LoadError(const std::string& source, std::size_t line, const std::string& path, const std::string& reason)
    : ConfigError(source + ":" + std::to_string(line) + ": " + (path.empty() ? "" : path + ": ") + reason),
      line_(line),
      path_(path),
      reason_(reason) {}

const char* to_string(Runner r) {
  switch (r) {
    case Runner::theorem1: return "theorem1";
    case Runner::theorem2: return "theorem2";
    case Runner::theorem4: return "theorem4";
    case Runner::corollary39: return "corollary39";
    case Runner::corollary40: return "corollary40";
    case Runner::corollary41: return "corollary41";
    case Runner::corollary42: return "corollary42";
    case Runner::corollary43: return "corollary43";
    case Runner::corollary44: return "corollary44";
    case Runner::baseline8: return "baseline8";
    case Runner::baseline9: return "baseline9";
  }
  return "unknown";
}

std::optional<Runner> parse_runner(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Runner::baseline9); ++i) {
    const auto r = static_cast<Runner>(i);
    if (name == to_string(r)) return r;
  }
  return std::nullopt;
}

void check_runner(const ProblemInstance& inst, Runner runner) {
  const std::string name = to_string(runner);
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw ConfigError("runner " + name + " needs " + what);
  };
  const bool hilbert = inst.space.is_hilbert();
  const bool q2 = inst.eq.size() == 2;
  const bool no_A = inst.A.empty();
  switch (runner) {
    case Runner::theorem1: need(q2, "exactly two equilibrium problems"); break;
    case Runner::theorem2: need(no_A, "an empty A family"); need(q2, "exactly two equilibrium problems"); break;
    case Runner::theorem4: need(!inst.eq.empty(), "at least one equilibrium problem"); break;
    case Runner::corollary39:
    case Runner::corollary44:
      need(runner == Runner::corollary39 || hilbert, "a Hilbert space");
      need(no_A, "an empty A family");
      need(q2, "exactly two equilibrium problems");
      need(all_B_zero(inst), "every B map to be zero");
      break;
    case Runner::corollary40:
    case Runner::corollary43:
      need(runner == Runner::corollary40 || hilbert, "a Hilbert space");
      need(no_A, "an empty A family");
      need(q2, "exactly two equilibrium problems");
      need(all_f_zero(inst), "every bifunction to be zero");
      break;
    case Runner::corollary41: need(hilbert, "a Hilbert space"); need(q2, "exactly two equilibrium problems"); break;
    case Runner::corollary42:
      need(hilbert, "a Hilbert space");
      need(no_A, "an empty A family");
      need(q2, "exactly two equilibrium problems");
      break;
    case Runner::baseline8:
    case Runner::baseline9: need(hilbert, "a Hilbert space"); break;
  }
}

ExperimentSpec parse_experiment(std::string_view text, const std::string& source) {
  const Document doc(text, source);
  const Node root(doc, doc.root(), "");
  root.only_keys({"space", "set", "families", "schedules", "runner", "config", "x0", "known_solution", "anchor",
                  "outputs"});

  const SpaceSpec space = parse_space(root["space"]);
  const Index dim = space.dim();
  ConvexSet C = ConvexSet::whole_space(dim);
  if (auto s = root.find("set")) C = parse_set(*s, dim);

  std::vector<FixedPointMap> T;
  std::vector<IsmOperator> A;
  std::vector<EquilibriumPair> eq;
  std::vector<double> beta;
  if (auto fam = root.find("families")) {
    fam->only_keys({"T", "A", "eq", "beta"});
    if (auto t = fam->find("T")) {
      for (std::size_t i = 0; i < t->size(); ++i) T.push_back(parse_fixed_point_map(t->at(i), dim));
    }
    if (auto a = fam->find("A")) {
      for (std::size_t i = 0; i < a->size(); ++i) {
        const Node entry = a->at(i);
        entry.only_keys({"map", "gamma"});
        MonotoneMap map = parse_map(entry["map"], dim);
        std::optional<double> gamma;
        if (auto g = entry.find("gamma")) gamma = g->number();
        A.push_back(entry.guard([&] { return IsmOperator::make(std::move(map), gamma); }));
      }
    }
    if (auto e = fam->find("eq")) {
      for (std::size_t i = 0; i < e->size(); ++i) {
        const Node entry = e->at(i);
        entry.only_keys({"f", "B"});
        Bifunction f = Bifunction::zero(dim);
        MonotoneMap B = MonotoneMap::zero(dim);
        if (auto fn = entry.find("f")) f = parse_bifunction(*fn, dim);
        if (auto bn = entry.find("B")) B = parse_map(*bn, dim);
        eq.push_back({std::move(f), std::move(B)});
      }
    }
    if (auto b = fam->find("beta")) {
      for (std::size_t i = 0; i < b->size(); ++i) beta.push_back(b->at(i).number());
    }
  }
  if (T.empty()) T.push_back(FixedPointMap::identity(dim));
  if (eq.empty()) eq.assign(2, {Bifunction::zero(dim), MonotoneMap::zero(dim)});

  ProblemInstance inst{space, std::move(C), std::move(T), std::move(A), std::move(eq), std::move(beta),
                       {}, {}, {}, root["x0"].vector(dim), std::nullopt, std::nullopt, std::nullopt};
  if (auto s = root.find("schedules")) {
    s->only_keys({"alpha", "lambda", "r", "anchor_weight"});
    if (auto n = s->find("alpha")) inst.alpha = parse_schedule(*n);
    if (auto n = s->find("lambda")) inst.lambda = parse_schedule(*n);
    if (auto n = s->find("r")) inst.r = parse_schedule(*n);
    if (auto n = s->find("anchor_weight")) inst.anchor_weight = parse_schedule(*n);
  }
  if (auto n = root.find("known_solution")) inst.known_solution = n->vector(dim);
  if (auto n = root.find("anchor")) inst.anchor = n->vector(dim);

  SolverConfig config;
  if (auto c = root.find("config")) {
    c->only_keys({"tol", "max_iters", "seed", "invariant_checks", "resolvent_tol", "inject_infeasible_cut_at"});
    if (auto n = c->find("tol")) config.tol = n->number();
    if (auto n = c->find("max_iters")) config.max_iters = static_cast<int>(n->integer());
    if (auto n = c->find("seed")) config.seed = static_cast<std::uint64_t>(n->integer());
    if (auto n = c->find("invariant_checks")) config.invariant_checks = n->boolean();
    if (auto n = c->find("resolvent_tol")) config.resolvent_tol = n->number();
    if (auto n = c->find("inject_infeasible_cut_at")) config.inject_infeasible_cut_at = static_cast<int>(n->integer());
    if (!(config.tol > 0.0)) (*c)["tol"].fail("tol must be positive");
    if (config.max_iters < 1) (*c)["max_iters"].fail("max_iters must be at least 1");
    if (!(config.resolvent_tol > 0.0)) (*c)["resolvent_tol"].fail("resolvent_tol must be positive");
  }

  OutputPaths outputs;
  if (auto o = root.find("outputs")) {
    o->only_keys({"trace", "summary"});
    if (auto n = o->find("trace")) outputs.trace = n->str();
    if (auto n = o->find("summary")) outputs.summary = n->str();
  }

  try {
    inst = fill_defaults(std::move(inst));
    validate_instance(inst, static_cast<std::size_t>(config.max_iters));
  } catch (const ConfigError& e) {
    doc.fail(pointer_for(e.what()), e.what());
  } catch (const DimensionError& e) {
    doc.fail("", e.what());
  }

  Runner runner = default_runner(inst);
  if (auto r = root.find("runner")) {
    const auto parsed = parse_runner(r->str());
    if (!parsed) r->fail("unknown runner '" + r->str() + "'");
    runner = *parsed;
    r->guard([&] { check_runner(inst, runner); });
  }
  return ExperimentSpec{std::move(inst), runner, config, outputs, source};
}

ExperimentSpec load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_experiment(text, path.string());
}

}  // namespace hybrid
