#include "curbflow/scenario.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

namespace curbflow::io {

namespace {

constexpr const char* kBlocksHeader = "id,k,mu,lambda,observed_u,price,through_traffic,cap";
constexpr const char* kEdgesHeader = "from,to,weight";

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot read '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

std::optional<double> parse_optional_number(const std::string& text, const std::string& file,
                                            size_t line_no, const std::string& field) {
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ValidationError(file + " line " + std::to_string(line_no) + ": field '" + field +
                              "' is not a finite number: '" + text + "'");
    }
    return v;
}

double require_nonnegative(std::optional<double> v, const std::string& file, size_t line_no,
                           const std::string& field) {
    if (v && *v < 0.0) {
        throw ValidationError(file + " line " + std::to_string(line_no) + ": field '" + field +
                              "' must be >= 0, got " + std::to_string(*v));
    }
    return v.value_or(0.0);
}

std::vector<net::BlockFace> parse_blocks_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const std::string file = path.filename().string();
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    std::vector<net::BlockFace> blocks;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (line_no == 1) {
            std::string header;
            for (size_t i = 0; i < fields.size(); ++i) {
                if (i) header += ',';
                header += fields[i];
            }
            if (header != kBlocksHeader) {
                throw ValidationError(file + ": expected header '" + std::string(kBlocksHeader) +
                                      "', got '" + header + "'");
            }
            continue;
        }
        if (fields.size() != 8) {
            throw ValidationError(file + " line " + std::to_string(line_no) + ": expected 8 fields, got " +
                                  std::to_string(fields.size()));
        }
        net::BlockFace b;
        b.id = fields[0];
        if (b.id.empty()) {
            throw ValidationError(file + " line " + std::to_string(line_no) + ": field 'id' is empty");
        }
        const auto k = parse_optional_number(fields[1], file, line_no, "k");
        const auto mu = parse_optional_number(fields[2], file, line_no, "mu");
        if (!k || *k < 1.0 || *k != std::floor(*k)) {
            throw ValidationError(file + " line " + std::to_string(line_no) +
                                  ": field 'k' must be a positive integer, got '" + fields[1] + "'");
        }
        if (!mu || *mu <= 0.0) {
            throw ValidationError(file + " line " + std::to_string(line_no) +
                                  ": field 'mu' must be positive, got '" + fields[2] + "'");
        }
        b.params = QueueParams(static_cast<int>(*k), *mu);
        b.lambda = parse_optional_number(fields[3], file, line_no, "lambda");
        require_nonnegative(b.lambda, file, line_no, "lambda");
        b.observed_u = parse_optional_number(fields[4], file, line_no, "observed_u");
        if (b.observed_u && (*b.observed_u < 0.0 || *b.observed_u >= 1.0)) {
            throw ValidationError(file + " line " + std::to_string(line_no) +
                                  ": field 'observed_u' must lie in [0, 1), got " +
                                  std::to_string(*b.observed_u));
        }
        b.price = parse_optional_number(fields[5], file, line_no, "price");
        require_nonnegative(b.price, file, line_no, "price");
        b.through_traffic = parse_optional_number(fields[6], file, line_no, "through_traffic");
        require_nonnegative(b.through_traffic, file, line_no, "through_traffic");
        b.congestion_cap = parse_optional_number(fields[7], file, line_no, "cap");
        require_nonnegative(b.congestion_cap, file, line_no, "cap");
        blocks.push_back(std::move(b));
    }
    if (blocks.empty()) {
        throw ValidationError(file + ": no block rows");
    }
    return blocks;
}

std::vector<net::Edge> parse_edges_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const std::string file = path.filename().string();
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    std::vector<net::Edge> edges;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (line_no == 1) {
            std::string header;
            for (size_t i = 0; i < fields.size(); ++i) {
                if (i) header += ',';
                header += fields[i];
            }
            if (header != kEdgesHeader) {
                throw ValidationError(file + ": expected header '" + std::string(kEdgesHeader) +
                                      "', got '" + header + "'");
            }
            continue;
        }
        if (fields.size() != 3) {
            throw ValidationError(file + " line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                  std::to_string(fields.size()));
        }
        net::Edge e;
        e.from = fields[0];
        e.to = fields[1];
        e.weight = parse_optional_number(fields[2], file, line_no, "weight");
        edges.push_back(std::move(e));
    }
    return edges;
}

std::optional<double> json_optional(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number()) {
        throw ValidationError(std::string("field '") + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

net::BlockFace block_from_json(const nlohmann::json& j) {
    if (!j.contains("id") || !j.at("id").is_string()) {
        throw ValidationError("inline block needs a string 'id'");
    }
    net::BlockFace b;
    b.id = j.at("id").get<std::string>();
    const auto k = json_optional(j, "k");
    const auto mu = json_optional(j, "mu");
    if (!k || !mu) {
        throw ValidationError("block '" + b.id + "' needs numeric 'k' and 'mu'");
    }
    if (*k < 1.0 || *k != std::floor(*k)) {
        throw ValidationError("block '" + b.id + "': 'k' must be a positive integer");
    }
    b.params = QueueParams(static_cast<int>(*k), *mu);
    b.lambda = json_optional(j, "lambda");
    b.observed_u = json_optional(j, "observed_u");
    b.price = json_optional(j, "price");
    b.alpha = json_optional(j, "alpha");
    b.congestion_cap = json_optional(j, "cap");
    b.through_traffic = json_optional(j, "through_traffic");
    if (b.observed_u && (*b.observed_u < 0.0 || *b.observed_u >= 1.0)) {
        throw ValidationError("block '" + b.id + "': 'observed_u' must lie in [0, 1)");
    }
    for (const char* field : {"lambda", "price", "cap", "through_traffic"}) {
        const auto v = json_optional(j, field);
        if (v && *v < 0.0) {
            throw ValidationError("block '" + b.id + "': '" + std::string(field) +
                                  "' must be >= 0");
        }
    }
    return b;
}

sim::SimConfig sim_from_json(const nlohmann::json& j) {
    sim::SimConfig c;
    if (auto v = json_optional(j, "horizon")) c.horizon_hours = *v;
    if (auto v = json_optional(j, "warmup")) c.warmup_hours = *v;
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (auto v = json_optional(j, "edge_delay")) c.edge_delay_hours = *v;
    if (j.contains("max_hops")) c.max_hops = j.at("max_hops").get<int>();
    if (j.contains("replications")) c.replications = j.at("replications").get<int>();
    if (j.contains("service")) {
        const auto& s = j.at("service");
        if (s.is_string()) {
            const auto name = s.get<std::string>();
            if (name == "exponential") {
                c.service.kind = sim::ServiceKind::exponential;
            } else if (name == "deterministic") {
                c.service.kind = sim::ServiceKind::deterministic;
            } else if (name == "lognormal") {
                c.service.kind = sim::ServiceKind::lognormal;
            } else {
                throw ValidationError("unknown service distribution '" + name + "'");
            }
        } else if (s.is_object() && s.contains("lognormal")) {
            c.service.kind = sim::ServiceKind::lognormal;
            c.service.cv = s.at("lognormal").get<double>();
        } else {
            throw ValidationError("'service' must be a name or {\"lognormal\": cv}");
        }
    }
    c.validate();
    return c;
}

nlohmann::json sim_to_json(const sim::SimConfig& c) {
    nlohmann::json j;
    j["horizon"] = c.horizon_hours;
    j["warmup"] = c.warmup_hours;
    j["seed"] = c.seed;
    j["edge_delay"] = c.edge_delay_hours;
    if (c.max_hops) j["max_hops"] = *c.max_hops;
    j["replications"] = c.replications;
    switch (c.service.kind) {
    case sim::ServiceKind::exponential: j["service"] = "exponential"; break;
    case sim::ServiceKind::deterministic: j["service"] = "deterministic"; break;
    case sim::ServiceKind::lognormal: j["service"] = {{"lognormal", c.service.cv}}; break;
    }
    return j;
}

} // namespace

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

double round12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

const net::BlockFace& Scenario::block(const std::string& id) const {
    for (const auto& b : blocks) {
        if (b.id == id) return b;
    }
    throw ValidationError("unknown block id '" + id + "'");
}

nlohmann::json Scenario::canonical() const {
    nlohmann::json j;
    j["name"] = name;
    j["units"] = units;
    j["objective_weights"] = weights == pricing::ObjectiveWeights::stalls ? "stalls" : "uniform";

    auto blocks_json = nlohmann::json::array();
    for (const auto& b : blocks) {
        nlohmann::json bj;
        bj["id"] = b.id;
        bj["k"] = b.params.k;
        bj["mu"] = b.params.mu;
        if (b.lambda) bj["lambda"] = *b.lambda;
        if (b.observed_u) bj["observed_u"] = *b.observed_u;
        if (b.price) bj["price"] = *b.price;
        if (b.alpha) bj["alpha"] = *b.alpha;
        if (b.congestion_cap) bj["cap"] = *b.congestion_cap;
        if (b.through_traffic) bj["through_traffic"] = *b.through_traffic;
        blocks_json.push_back(std::move(bj));
    }
    j["blocks"] = std::move(blocks_json);

    auto edges_json = nlohmann::json::array();
    for (const auto& e : graph.edges) {
        nlohmann::json ej;
        ej["from"] = e.from;
        ej["to"] = e.to;
        if (e.weight) ej["weight"] = *e.weight;
        edges_json.push_back(std::move(ej));
    }
    j["edges"] = std::move(edges_json);

    nlohmann::json el;
    if (elasticity.alpha) el["alpha"] = *elasticity.alpha;
    if (elasticity.elasticity) el["elasticity"] = *elasticity.elasticity;
    if (elasticity.reference_observed) {
        el["reference"] = "observed";
    } else if (elasticity.p0 && elasticity.u0) {
        el["reference"] = {{"p0", *elasticity.p0}, {"u0", *elasticity.u0}};
    }
    if (!el.empty()) j["elasticity"] = std::move(el);

    nlohmann::json pb;
    pb["min"] = price_bounds.min;
    if (price_bounds.max) pb["max"] = *price_bounds.max;
    j["price_bounds"] = std::move(pb);

    if (sim_config) j["sim"] = sim_to_json(*sim_config);
    return j;
}

std::string Scenario::content_hash() const {
    return fnv1a64_hex(canonical().dump());
}

Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    Scenario s;
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("units")) s.units = j.at("units").get<std::string>();

    if (!j.contains("blocks")) {
        throw ValidationError("scenario needs 'blocks' (CSV path or inline array)");
    }
    if (j.at("blocks").is_string()) {
        s.blocks = parse_blocks_csv(base_dir / j.at("blocks").get<std::string>());
    } else if (j.at("blocks").is_array()) {
        for (const auto& bj : j.at("blocks")) s.blocks.push_back(block_from_json(bj));
        if (s.blocks.empty()) throw ValidationError("scenario 'blocks' array is empty");
    } else {
        throw ValidationError("'blocks' must be a CSV path or an array");
    }

    std::unordered_set<std::string> ids;
    for (const auto& b : s.blocks) {
        if (!ids.insert(b.id).second) {
            throw ValidationError("duplicate block id '" + b.id + "'");
        }
        s.graph.nodes.push_back(b.id);
    }

    if (j.contains("edges")) {
        if (j.at("edges").is_string()) {
            s.graph.edges = parse_edges_csv(base_dir / j.at("edges").get<std::string>());
        } else if (j.at("edges").is_array()) {
            for (const auto& ej : j.at("edges")) {
                net::Edge e;
                e.from = ej.at("from").get<std::string>();
                e.to = ej.at("to").get<std::string>();
                if (ej.contains("weight") && !ej.at("weight").is_null()) {
                    e.weight = ej.at("weight").get<double>();
                }
                s.graph.edges.push_back(std::move(e));
            }
        } else {
            throw ValidationError("'edges' must be a CSV path or an array");
        }
    }

    if (j.contains("elasticity")) {
        const auto& el = j.at("elasticity");
        s.elasticity.alpha = json_optional(el, "alpha");
        s.elasticity.elasticity = json_optional(el, "elasticity");
        if (s.elasticity.elasticity) {
            s.elasticity.elasticity = std::abs(*s.elasticity.elasticity);
        }
        if (el.contains("reference")) {
            const auto& ref = el.at("reference");
            if (ref.is_string() && ref.get<std::string>() == "observed") {
                s.elasticity.reference_observed = true;
            } else if (ref.is_object()) {
                s.elasticity.p0 = json_optional(ref, "p0");
                s.elasticity.u0 = json_optional(ref, "u0");
            } else {
                throw ValidationError("'elasticity.reference' must be \"observed\" or {p0, u0}");
            }
        }
    }

    if (j.contains("price_bounds")) {
        const auto& pb = j.at("price_bounds");
        if (auto v = json_optional(pb, "min")) s.price_bounds.min = *v;
        s.price_bounds.max = json_optional(pb, "max");
        if (s.price_bounds.min < 0.0) {
            throw ValidationError("'price_bounds.min' must be >= 0");
        }
        if (s.price_bounds.max && *s.price_bounds.max < s.price_bounds.min) {
            throw ValidationError("'price_bounds.max' below 'price_bounds.min'");
        }
    }

    if (j.contains("objective_weights")) {
        const auto w = j.at("objective_weights").get<std::string>();
        if (w == "stalls") {
            s.weights = pricing::ObjectiveWeights::stalls;
        } else if (w == "uniform") {
            s.weights = pricing::ObjectiveWeights::uniform;
        } else {
            throw ValidationError("'objective_weights' must be \"stalls\" or \"uniform\"");
        }
    }

    if (j.contains("sim")) s.sim_config = sim_from_json(j.at("sim"));

    // Structural graph errors are load failures; advisories become warnings.
    const auto report = net::validate_graph(s.graph);
    if (report.has_errors()) {
        std::string msg = "scenario graph is invalid:";
        for (const auto& issue : report.issues) {
            if (issue.is_error) msg += "\n  - " + issue.message;
        }
        throw ValidationError(msg);
    }
    for (const auto& issue : report.issues) s.warnings.push_back(issue.message);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw ValidationError("failed to parse '" + path.string() + "': " + err.what());
    }
    try {
        return scenario_from_json(j, path.parent_path());
    } catch (const nlohmann::json::exception& err) {
        throw ValidationError("bad scenario '" + path.string() + "': " + err.what());
    }
}

std::vector<CalibratedDemand> calibrate_demand(const Scenario& scenario,
                                               std::vector<std::string>* warnings) {
    std::vector<CalibratedDemand> out;
    out.reserve(scenario.blocks.size());
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    for (const auto& b : scenario.blocks) {
        CalibratedDemand cd;
        cd.id = b.id;
        std::optional<double> alpha;
        if (b.alpha) {
            alpha = *b.alpha;
            cd.source = "block";
        } else if (scenario.elasticity.alpha) {
            alpha = *scenario.elasticity.alpha;
            cd.source = "global-alpha";
        } else if (scenario.elasticity.elasticity) {
            std::optional<double> p0 = scenario.elasticity.p0;
            std::optional<double> u0 = scenario.elasticity.u0;
            if (scenario.elasticity.reference_observed) {
                p0 = b.price;
                u0 = b.observed_u;
            }
            if (!p0 || !u0 || *p0 <= 0.0 || *u0 <= 0.0) {
                cd.source = "excluded: elasticity reference point (p0, u0) unavailable";
                warn("block '" + b.id + "' excluded from pricing: " + cd.source);
                out.push_back(std::move(cd));
                continue;
            }
            alpha = *scenario.elasticity.elasticity * *u0 / *p0;
            cd.source = "elasticity-reference";
        } else {
            cd.source = "excluded: no demand slope configured";
            warn("block '" + b.id + "' excluded from pricing: no demand slope configured");
            out.push_back(std::move(cd));
            continue;
        }

        if (!(*alpha > 0.0)) {
            cd.source = "excluded: demand slope is zero or negative; price has no effect";
            warn("block '" + b.id + "' excluded from pricing: alpha <= 0");
            out.push_back(std::move(cd));
            continue;
        }
        const double p_max =
            std::min(scenario.price_bounds.max.value_or(std::numeric_limits<double>::infinity()),
                     1.0 / *alpha);
        if (p_max < scenario.price_bounds.min) {
            cd.source = "excluded: price box empty (1/alpha below the price floor)";
            warn("block '" + b.id + "' excluded from pricing: price box empty");
            out.push_back(std::move(cd));
            continue;
        }
        cd.model = pricing::ElasticityModel(*alpha, scenario.price_bounds.min, p_max);
        out.push_back(std::move(cd));
    }
    return out;
}

pricing::PricingProblem build_pricing_problem(const Scenario& scenario,
                                              std::vector<std::string>* warnings) {
    pricing::PricingProblem problem;
    problem.weights = scenario.weights;
    const auto demand = calibrate_demand(scenario, warnings);
    for (size_t i = 0; i < scenario.blocks.size(); ++i) {
        if (!demand[i].model) continue;
        pricing::PricedBlock pb;
        pb.block = scenario.blocks[i];
        pb.model = *demand[i].model;
        pb.cap = scenario.blocks[i].congestion_cap;
        problem.blocks.push_back(std::move(pb));
    }
    if (problem.blocks.empty()) {
        throw ValidationError("no block has a usable demand model; nothing to optimize");
    }
    return problem;
}

} // namespace curbflow::io
