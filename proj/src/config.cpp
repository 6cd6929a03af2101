#include "repspace/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

namespace repspace {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& path, const std::string& message) {
    throw Error(ErrorKind::ValidationError, path + ": " + message);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

const Json& require(const Json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) {
        invalid(path, "expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        invalid(join(path, key), "missing field");
    }
    return *it;
}

double as_number(const Json& j, const std::string& path) {
    if (!j.is_number()) {
        invalid(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        invalid(path, "must be finite");
    }
    return v;
}

double number(const Json& obj, const std::string& path, const char* key) {
    return as_number(require(obj, path, key), join(path, key));
}

double number_or(const Json& obj, const std::string& path, const char* key, double fallback) {
    return obj.contains(key) ? number(obj, path, key) : fallback;
}

std::size_t count_or(const Json& obj, const std::string& path, const char* key, std::size_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const Json& j = obj.at(key);
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        invalid(join(path, key), "expected a non-negative integer");
    }
    return j.get<std::size_t>();
}

bool flag_or(const Json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_boolean()) {
        invalid(join(path, key), "expected true or false");
    }
    return obj.at(key).get<bool>();
}

std::string text(const Json& obj, const std::string& path, const char* key) {
    const Json& j = require(obj, path, key);
    if (!j.is_string()) {
        invalid(join(path, key), "expected a string");
    }
    return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        invalid(path, "expected a non-empty array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(as_number(j[i], index(path, i)));
    }
    return out;
}

// Runs a component validator and reports its complaint under `path`.
template <typename F>
void checked(const std::string& path, F&& f) {
    try {
        f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ValidationError) {
            throw;
        }
        std::string msg = e.what();
        const auto colon = msg.find(": ");
        invalid(path, colon == std::string::npos ? msg : msg.substr(colon + 2));
    }
}

std::vector<ResonantFactor> factors(const Json& obj, const std::string& path, const char* key) {
    std::vector<ResonantFactor> out;
    if (!obj.contains(key)) {
        return out;
    }
    const Json& arr = obj.at(key);
    const std::string p = join(path, key);
    if (!arr.is_array()) {
        invalid(p, "expected an array");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string pi = index(p, i);
        ResonantFactor f{number(arr[i], pi, "f_hz"), number(arr[i], pi, "zeta")};
        if (!(f.f_hz > 0.0)) {
            invalid(join(pi, "f_hz"), "must be positive");
        }
        if (f.zeta < 0.0) {
            invalid(join(pi, "zeta"), "must be non-negative");
        }
        out.push_back(f);
    }
    return out;
}

PlantSpec parse_plant(const Json& j, const std::string& path) {
    PlantSpec spec;
    const std::string form = text(j, path, "form");
    spec.delay = number_or(j, path, "delay", 0.0);
    if (spec.delay < 0.0) {
        invalid(join(path, "delay"), "must be non-negative");
    }
    if (form == "coefficients") {
        spec.form = PlantSpec::Form::Coefficients;
        spec.num = numbers(require(j, path, "num"), join(path, "num"));
        spec.den = numbers(require(j, path, "den"), join(path, "den"));
    } else if (form == "resonant") {
        spec.form = PlantSpec::Form::Resonant;
        spec.gain = number(j, path, "gain");
        spec.zeros = factors(j, path, "zeros");
        spec.poles = factors(j, path, "poles");
    } else {
        invalid(join(path, "form"), "expected \"coefficients\" or \"resonant\"");
    }
    checked(path, [&] {
        const TransferFunction tf = spec.expand();
        if (!tf.is_proper()) {
            throw Error(ErrorKind::ImproperTransferFunction, "plant must be proper");
        }
    });
    return spec;
}

SectionSpec parse_section(const Json& j, const std::string& path) {
    SectionSpec spec;
    if (j.contains("kind")) {
        const std::string kind = text(j, path, "kind");
        checked(join(path, "kind"), [&] { spec.kind = controller_kind_from_string(kind); });
        const Json& params = j.contains("params") ? j.at("params") : Json::object();
        const std::string pp = join(path, "params");
        if (!params.is_object()) {
            invalid(pp, "expected an object");
        }
        auto opt = [&](const char* key) -> std::optional<double> {
            if (!params.contains(key)) {
                return std::nullopt;
            }
            return number(params, pp, key);
        };
        spec.params.K = opt("K");
        spec.params.Td = opt("Td");
        spec.params.Ti = opt("Ti");
        spec.params.T = opt("T");
        spec.params.alpha = opt("alpha");
        spec.params.beta = opt("beta");
        spec.params.tau = opt("tau");
        spec.params.zeta = opt("zeta");
        spec.params.omega = opt("omega");
        checked(path, [&] { spec.coefficients = make_controller_tf(*spec.kind, spec.params); });
        return spec;
    }
    // Ascending order: [c0, c1, c2].
    auto triple = [&](const char* key) {
        const std::string p = join(path, key);
        const auto v = numbers(require(j, path, key), p);
        if (v.size() > 3) {
            invalid(p, "a section has at most three coefficients");
        }
        std::array<double, 3> out{0.0, 0.0, 0.0};
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    };
    const auto num = triple("num");
    const auto den = triple("den");
    spec.coefficients = {num[2], num[1], num[0], den[2], den[1], den[0]};
    if (spec.coefficients.denominator_is_zero()) {
        invalid(join(path, "den"), "denominator is identically zero");
    }
    return spec;
}

std::vector<SectionSpec> parse_sections(const Json& obj, const std::string& path, const char* key) {
    std::vector<SectionSpec> out;
    if (!obj.contains(key)) {
        return out;
    }
    const Json& arr = obj.at(key);
    const std::string p = join(path, key);
    if (!arr.is_array()) {
        invalid(p, "expected an array of sections");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
        out.push_back(parse_section(arr[i], index(p, i)));
    }
    return out;
}

Slot parse_slot(const Json& j, const std::string& path) {
    if (!j.is_string()) {
        invalid(path, "expected a slot name (n2, n1, n0, d2, d1, d0)");
    }
    const auto slot = slot_from_string(j.get<std::string>());
    if (!slot) {
        invalid(path, "unknown slot '" + j.get<std::string>() + "'");
    }
    return *slot;
}

Axis parse_axis(const Json& j, const std::string& path) {
    return {number(j, path, "lo"), number(j, path, "hi"), flag_or(j, path, "log", false)};
}

void parse_selection(const Json& j, const std::string& path, DesignConfig& c) {
    auto& sel = c.selection;
    const std::string filter = j.contains("filter") ? text(j, path, "filter") : "qp";
    if (filter == "qp") {
        sel.target = FilterTarget::Qp;
    } else if (filter == "bp") {
        sel.target = FilterTarget::Bp;
    } else {
        invalid(join(path, "filter"), "expected \"qp\" or \"bp\"");
    }
    sel.section = count_or(j, path, "section", 0);
    const auto& chain = sel.target == FilterTarget::Qp ? c.qp : c.bp;
    if (sel.section >= chain.size()) {
        invalid(join(path, "section"), "no such section in " + filter);
    }
    const Json& free = require(j, path, "free");
    if (!free.is_array() || free.size() != 2) {
        invalid(join(path, "free"), "expected two slot names");
    }
    sel.free = {parse_slot(free[0], join(path, "free[0]")), parse_slot(free[1], join(path, "free[1]"))};
    if (j.contains("tie")) {
        const Json& tie = j.at("tie");
        const std::string tp = join(path, "tie");
        sel.tie = Tie{parse_slot(require(tie, tp, "slot"), join(tp, "slot")),
                      parse_slot(require(tie, tp, "to"), join(tp, "to"))};
    }
    const Json& box = require(j, path, "box");
    const std::string bp = join(path, "box");
    sel.box = {parse_axis(require(box, bp, "p1"), join(bp, "p1")),
               parse_axis(require(box, bp, "p2"), join(bp, "p2"))};
    sel.clip = flag_or(j, path, "clip", false);
    checked(path, [&] { sel.validate(); });
    if (j.contains("labels")) {
        const Json& labels = j.at("labels");
        if (!labels.is_array() || labels.size() != 2 || !labels[0].is_string() || !labels[1].is_string()) {
            invalid(join(path, "labels"), "expected two strings");
        }
        c.axis_labels = {labels[0].get<std::string>(), labels[1].get<std::string>()};
    }
    if (j.contains("point")) {
        const auto p = numbers(j.at("point"), join(path, "point"));
        if (p.size() != 2) {
            invalid(join(path, "point"), "expected two numbers");
        }
        if (!sel.box.contains(p[0], p[1])) {
            invalid(join(path, "point"), "point lies outside the parameter box");
        }
        c.point = std::array<double, 2>{p[0], p[1]};
    }
}

void parse_schedule(const Json& j, const std::string& path, DesignConfig& c) {
    c.epsilon = number_or(j, path, "epsilon", 0.05);
    c.check_stability = flag_or(j, path, "stability", true);
    c.stab_points = count_or(j, path, "stab_points", kDefaultStabGridSize);
    if (c.stab_points < 2) {
        invalid(join(path, "stab_points"), "need at least two points");
    }
    const std::string rp = join(path, "rows");
    const Json& rows = j.contains("rows") ? j.at("rows") : Json::array();
    if (!rows.is_array()) {
        invalid(rp, "expected an array");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string p = index(rp, i);
        const Json& r = rows[i];
        WeightRow row;
        const Json& k = require(r, p, "k");
        if (!k.is_number_integer() || k.get<long long>() < 1) {
            invalid(join(p, "k"), "harmonic index must be an integer >= 1");
        }
        row.k = k.get<int>();
        row.ws = number_or(r, p, "ws", 0.0);
        row.wt = number_or(r, p, "wt", 0.0);
        if (row.ws < 0.0 || row.wt < 0.0) {
            invalid(p, "weights must be non-negative");
        }
        const std::string band = text(r, p, "band");
        checked(join(p, "band"), [&] { row.band = band_from_string(band); });
        row.omega = WeightSchedule::harmonic_omega(row.k, c.tau_d);
        c.rows.push_back(row);
    }
    checked(path, [&] { (void)c.schedule(); });
}

void parse_resolution(const Json& j, const std::string& path, DesignConfig& c) {
    if (j.contains("raster")) {
        const auto v = numbers(j.at("raster"), join(path, "raster"));
        if (v.size() != 2 || v[0] < 2 || v[1] < 2 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
            invalid(join(path, "raster"), "expected two integers >= 2");
        }
        c.raster_nx = static_cast<std::size_t>(v[0]);
        c.raster_ny = static_cast<std::size_t>(v[1]);
    }
    c.theta_resolution = count_or(j, path, "theta", kDefaultThetaResolution);
    if (c.theta_resolution < 16) {
        invalid(join(path, "theta"), "must be at least 16");
    }
}

void parse_simulation(const Json& j, const std::string& path, DesignConfig& c) {
    auto& s = c.simulation;
    s.dt = number_or(j, path, "dt", 0.0);
    if (s.dt < 0.0) {
        invalid(join(path, "dt"), "must be non-negative (0 selects the default)");
    }
    s.periods = count_or(j, path, "periods", 20);
    if (s.periods < 2) {
        invalid(join(path, "periods"), "need at least two periods");
    }
    s.reference = ReferenceSignal::triangle(100.0, c.tau_d);
    if (j.contains("reference")) {
        const Json& r = j.at("reference");
        const std::string rp = join(path, "reference");
        const std::string kind = r.contains("kind") ? text(r, rp, "kind") : "triangle";
        if (kind == "triangle") {
            s.reference.kind = ReferenceSignal::Kind::Triangle;
        } else if (kind == "sine") {
            s.reference.kind = ReferenceSignal::Kind::Sine;
        } else if (kind == "zero") {
            s.reference.kind = ReferenceSignal::Kind::Zero;
        } else {
            invalid(join(rp, "kind"), "expected triangle, sine or zero");
        }
        s.reference.amplitude = number_or(r, rp, "amplitude", 100.0);
        s.reference.period = number_or(r, rp, "period", c.tau_d);
        if (!(s.reference.period > 0.0)) {
            invalid(join(rp, "period"), "must be positive");
        }
    }
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Json factors_json(const std::vector<ResonantFactor>& fs) {
    Json out = Json::array();
    for (const auto& f : fs) {
        out.push_back(Json{{"f_hz", f.f_hz}, {"zeta", f.zeta}});
    }
    return out;
}

Json sections_json(const std::vector<SectionSpec>& sections) {
    Json out = Json::array();
    for (const auto& s : sections) {
        Json j;
        if (s.kind) {
            j["kind"] = std::string(to_string(*s.kind));
            Json params = Json::object();
            const auto& p = s.params;
            auto put = [&](const char* key, const std::optional<double>& v) {
                if (v) {
                    params[key] = *v;
                }
            };
            put("K", p.K);
            put("Td", p.Td);
            put("Ti", p.Ti);
            put("T", p.T);
            put("alpha", p.alpha);
            put("beta", p.beta);
            put("tau", p.tau);
            put("zeta", p.zeta);
            put("omega", p.omega);
            j["params"] = std::move(params);
        } else {
            const auto& c = s.coefficients;
            j["num"] = Json::array({c.n0, c.n1, c.n2});
            j["den"] = Json::array({c.d0, c.d1, c.d2});
        }
        out.push_back(std::move(j));
    }
    return out;
}

Json axis_json(const Axis& a) {
    return Json{{"lo", a.lo}, {"hi", a.hi}, {"log", a.log}};
}

const char* reference_kind(ReferenceSignal::Kind kind) {
    switch (kind) {
    case ReferenceSignal::Kind::Zero: return "zero";
    case ReferenceSignal::Kind::Triangle: return "triangle";
    case ReferenceSignal::Kind::Sine: return "sine";
    }
    return "zero";
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

} // namespace

TransferFunction PlantSpec::expand() const {
    if (form == Form::Coefficients) {
        return TransferFunction(num, den, delay);
    }
    auto product = [](const std::vector<ResonantFactor>& fs) {
        std::vector<double> p{1.0};
        for (const auto& f : fs) {
            const double w = 2.0 * std::numbers::pi * f.f_hz;
            p = poly_mul(p, {w * w, 2.0 * f.zeta * w, 1.0});
        }
        return p;
    };
    std::vector<double> n = product(zeros);
    for (double& c : n) {
        c *= gain;
    }
    return TransferFunction(std::move(n), product(poles), delay);
}

BiquadSection SectionSpec::section() const {
    return kind ? make_controller_tf(*kind, params) : coefficients;
}

bool operator==(const SectionSpec& a, const SectionSpec& b) {
    const auto& p = a.params;
    const auto& q = b.params;
    const auto& c = a.coefficients;
    const auto& d = b.coefficients;
    return a.kind == b.kind && p.K == q.K && p.Td == q.Td && p.Ti == q.Ti && p.T == q.T &&
           p.alpha == q.alpha && p.beta == q.beta && p.tau == q.tau && p.zeta == q.zeta &&
           p.omega == q.omega && c.n2 == d.n2 && c.n1 == d.n1 && c.n0 == d.n0 && c.d2 == d.d2 &&
           c.d1 == d.d1 && c.d0 == d.d0;
}

RepetitiveController DesignConfig::controller() const {
    RepetitiveController ctrl;
    ctrl.tau_d = tau_d;
    ctrl.tau_q = tau_q;
    ctrl.tau_b = tau_b;
    for (const auto& s : qp) {
        ctrl.qp_sections.push_back(s.section());
    }
    for (const auto& s : bp) {
        ctrl.bp_sections.push_back(s.section());
    }
    return ctrl;
}

WeightSchedule DesignConfig::schedule() const {
    return WeightSchedule::from_table(tau_d, rows, epsilon);
}

DesignProblem DesignConfig::problem() const {
    DesignProblem p;
    p.plant = plant();
    p.ctrl_template = controller();
    p.selection = selection;
    p.schedule = schedule();
    p.check_stability = check_stability;
    p.stab_grid = default_stab_grid(p.schedule, tau_d, stab_points);
    return p;
}

RasterGrid DesignConfig::grid() const {
    return {selection.box, raster_nx, raster_ny};
}

double DesignConfig::sim_dt() const {
    return simulation.dt > 0.0 ? simulation.dt : tau_d / kDefaultStepsPerPeriod;
}

DesignConfig parse_config(std::string_view text_in) {
    Json root;
    try {
        root = Json::parse(text_in.begin(), text_in.end());
    } catch (const Json::parse_error& e) {
        const auto [line, col] = line_and_column(text_in, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream msg;
        msg << "line " << line << ", column " << col << ": " << e.what();
        throw Error(ErrorKind::ParseError, msg.str());
    }
    if (!root.is_object()) {
        invalid("(root)", "expected a JSON object");
    }
    const std::string schema = text(root, "", "schema");
    if (schema != kConfigSchema) {
        invalid("schema", "unsupported schema '" + schema + "', expected '" + std::string(kConfigSchema) + "'");
    }
    DesignConfig c;
    c.name = root.contains("name") ? text(root, "", "name") : "";
    c.plant_spec = parse_plant(require(root, "", "plant"), "plant");

    const Json& ctrl = require(root, "", "controller");
    c.tau_d = number(ctrl, "controller", "tau_d");
    c.tau_q = number_or(ctrl, "controller", "tau_q", 0.0);
    c.tau_b = number_or(ctrl, "controller", "tau_b", 0.0);
    c.qp = parse_sections(ctrl, "controller", "qp");
    c.bp = parse_sections(ctrl, "controller", "bp");
    checked("controller", [&] { c.controller().validate(); });

    parse_selection(require(root, "", "selection"), "selection", c);
    parse_schedule(root.contains("schedule") ? root.at("schedule") : Json::object(), "schedule", c);
    parse_resolution(root.contains("resolution") ? root.at("resolution") : Json::object(), "resolution", c);
    parse_simulation(root.contains("simulation") ? root.at("simulation") : Json::object(), "simulation", c);
    return c;
}

DesignConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const DesignConfig& c) {
    Json root;
    root["schema"] = std::string(kConfigSchema);
    root["name"] = c.name;

    Json plant;
    const auto& p = c.plant_spec;
    if (p.form == PlantSpec::Form::Coefficients) {
        plant["form"] = "coefficients";
        plant["num"] = p.num;
        plant["den"] = p.den;
    } else {
        plant["form"] = "resonant";
        plant["gain"] = p.gain;
        plant["zeros"] = factors_json(p.zeros);
        plant["poles"] = factors_json(p.poles);
    }
    plant["delay"] = p.delay;
    root["plant"] = std::move(plant);

    root["controller"] = Json{{"tau_d", c.tau_d},
                              {"tau_q", c.tau_q},
                              {"tau_b", c.tau_b},
                              {"qp", sections_json(c.qp)},
                              {"bp", sections_json(c.bp)}};

    const auto& s = c.selection;
    Json sel;
    sel["filter"] = s.target == FilterTarget::Qp ? "qp" : "bp";
    sel["section"] = s.section;
    sel["free"] = Json::array({std::string(to_string(s.free[0])), std::string(to_string(s.free[1]))});
    if (s.tie) {
        sel["tie"] = Json{{"slot", std::string(to_string(s.tie->tied))},
                          {"to", std::string(to_string(s.tie->source))}};
    }
    sel["box"] = Json{{"p1", axis_json(s.box.p1)}, {"p2", axis_json(s.box.p2)}};
    sel["clip"] = s.clip;
    sel["labels"] = Json::array({c.axis_labels[0], c.axis_labels[1]});
    if (c.point) {
        sel["point"] = Json::array({(*c.point)[0], (*c.point)[1]});
    }
    root["selection"] = std::move(sel);

    Json rows = Json::array();
    for (const auto& r : c.rows) {
        rows.push_back(Json{{"k", r.k}, {"ws", r.ws}, {"wt", r.wt}, {"band", std::string(to_string(r.band))}});
    }
    root["schedule"] = Json{{"epsilon", c.epsilon},
                            {"stability", c.check_stability},
                            {"stab_points", c.stab_points},
                            {"rows", std::move(rows)}};
    root["resolution"] = Json{{"raster", Json::array({c.raster_nx, c.raster_ny})}, {"theta", c.theta_resolution}};
    const auto& sim = c.simulation;
    root["simulation"] = Json{{"dt", sim.dt},
                              {"periods", sim.periods},
                              {"reference",
                               Json{{"kind", reference_kind(sim.reference.kind)},
                                    {"amplitude", sim.reference.amplitude},
                                    {"period", sim.reference.period}}}};
    return root.dump(2) + "\n";
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::IoError, "SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0x0f];
    }
    return out;
}

std::string config_hash(const DesignConfig& config) {
    return sha256_hex(serialize_config(config));
}

} // namespace repspace
