#include "traction/scenario_io.hpp"

#include "traction/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

namespace traction {

using nlohmann::json;

namespace {

/// Reads keys of one JSON object and rejects the ones nobody asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("must be an object");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) fail("unknown key '" + key + "'");
        }
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    template <class T>
    void read(const std::string& key, T& target) {
        if (!has(key)) return;
        try {
            target = j_.at(key).get<T>();
        } catch (const json::exception&) {
            fail("key '" + key + "' has the wrong type");
        }
    }

    std::string child(const std::string& key) const { return path_ + "." + key; }

    [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorKind::Config, path_ + ": " + msg); }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Point2 read_point(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw Error(ErrorKind::Config, where + ": expected [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

SoilParams read_soil(const json& j, const std::string& where, const CurveShape& family, SoilParams base,
                     std::string* name, std::variant<Rect, Polygon>* shape) {
    Section s(j, where);
    base.p = family.p;
    base.alpha1 = family.alpha1;
    base.alpha2 = family.alpha2;
    s.read("a", base.a);
    s.read("rho_s", base.rho_s);
    s.read("p", base.p);
    s.read("alpha1", base.alpha1);
    s.read("alpha2", base.alpha2);
    if (name) s.read("name", *name);
    if (shape) {
        const bool rect = s.has("rect");
        const bool poly = s.has("polygon");
        if (rect == poly) s.fail("exactly one of 'rect' or 'polygon' is required");
        if (rect) {
            const json& r = s.at("rect");
            if (!r.is_array() || r.size() != 4) s.fail("'rect' must be [x0, y0, x1, y1]");
            Rect box{r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
            if (box.x1 < box.x0 || box.y1 < box.y0) s.fail("'rect' corners are not ordered");
            *shape = box;
        } else {
            Polygon p;
            for (const json& v : s.at("polygon")) p.vertices.push_back(read_point(v, s.child("polygon")));
            if (p.vertices.size() < 3) s.fail("'polygon' needs at least 3 vertices");
            *shape = p;
        }
    }
    try {
        base.validate();
    } catch (const Error& e) {
        s.fail(e.what());
    }
    return base;
}

} // namespace

ScenarioFile default_scenario_file() {
    ScenarioFile f;
    f.scenario = default_scenario();
    f.estimator.vehicle = f.scenario.vehicle;
    f.estimator.family = stubble_family();
    f.estimator.wheel_speed_noise = f.scenario.noise.wheel_speed;
    f.estimator.ground_speed_noise = f.scenario.noise.ground_speed;
    return f;
}

ScenarioFile parse_scenario(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, std::string("scenario is not valid JSON: ") + e.what());
    }

    ScenarioFile f = default_scenario_file();
    ScenarioSpec& sc = f.scenario;
    EstimatorConfig& est = f.estimator;
    CurveShape family = est.family;
    bool estimator_wheel_noise = false, estimator_ground_noise = false;

    {
        Section top(root, "scenario");
        top.read("seed", sc.seed);
        top.read("duration", sc.duration);
        top.read("target_speed", sc.target_speed);
        top.read("sample_period", sc.sample_period);
        top.read("internal_step", sc.internal_step);

        if (top.has("vehicle")) {
            Section s(top.at("vehicle"), "vehicle");
            s.read("wheel_mass", sc.vehicle.wheel_mass);
            s.read("wheel_inertia", sc.vehicle.wheel_inertia);
            s.read("vehicle_mass", sc.vehicle.vehicle_mass);
            s.read("unloaded_radius", sc.vehicle.unloaded_radius);
            s.read("tire_pressure", sc.vehicle.tire_pressure);
            s.read("tire_width", sc.vehicle.tire_width);
            s.read("tire_rr_coeff", sc.vehicle.tire_rr_coeff);
            s.read("front_axle_share", sc.front_axle_share);
        }
        if (top.has("controller")) {
            Section s(top.at("controller"), "controller");
            s.read("kp", sc.controller.kp);
            s.read("ki", sc.controller.ki);
            s.read("power_cap", sc.controller.power_cap);
            s.read("torque_cap", sc.controller.torque_cap);
        }
        if (top.has("drawbar")) {
            Section s(top.at("drawbar"), "drawbar");
            s.read("force", sc.drawbar.force);
            s.read("ramp_time", sc.drawbar.ramp_time);
        }
        if (top.has("noise")) {
            Section s(top.at("noise"), "noise");
            s.read("wheel_speed", sc.noise.wheel_speed);
            s.read("ground_speed", sc.noise.ground_speed);
            s.read("torque", sc.noise.torque);
            s.read("front_load", sc.noise.front_load);
            s.read("drawbar", sc.noise.drawbar);
            s.read("position", sc.noise.position);
        }
        if (top.has("soil_family")) {
            Section s(top.at("soil_family"), "soil_family");
            s.read("p", family.p);
            s.read("alpha1", family.alpha1);
            s.read("alpha2", family.alpha2);
        }
        if (top.has("field")) {
            Section s(top.at("field"), "field");
            s.read("width", sc.field.width);
            s.read("length", sc.field.length);
            if (s.has("default")) {
                sc.field.default_soil = read_soil(s.at("default"), "field.default", family, sc.field.default_soil,
                                                  &sc.field.default_name, nullptr);
            } else {
                sc.field.default_soil = SoilParams::from_shape(sc.field.default_soil.a, family,
                                                               sc.field.default_soil.rho_s);
            }
            if (s.has("regions")) {
                const json& regions = s.at("regions");
                if (!regions.is_array()) s.fail("'regions' must be an array");
                sc.field.regions.clear();
                for (std::size_t k = 0; k < regions.size(); ++k) {
                    SoilRegion region;
                    region.name = "region" + std::to_string(k + 1);
                    region.soil = read_soil(regions[k], "field.regions[" + std::to_string(k) + "]", family,
                                            SoilParams{}, &region.name, &region.shape);
                    sc.field.regions.push_back(std::move(region));
                }
            }
        }
        if (top.has("path")) {
            const json& path = top.at("path");
            if (!path.is_array()) top.fail("'path' must be an array of [x, y]");
            sc.path.clear();
            for (const json& p : path) sc.path.push_back(read_point(p, "path"));
        }
        if (top.has("estimator")) {
            Section s(top.at("estimator"), "estimator");
            s.read("adapt_process_noise", est.adapt_process_noise);
            s.read("fuzzy_supervision", est.fuzzy_supervision);
            s.read("initial_adhesion", est.initial_adhesion);
            s.read("initial_soil_resistance", est.initial_soil_resistance);
            s.read("initial_speed_std", est.initial_speed_std);
            s.read("initial_adhesion_std", est.initial_adhesion_std);
            s.read("initial_soil_resistance_std", est.initial_soil_resistance_std);
            s.read("speed_process_var", est.speed_process_var);
            s.read("adhesion_process_var", est.adhesion_process_var);
            s.read("soil_resistance_process_var", est.soil_resistance_process_var);
            estimator_wheel_noise = s.has("wheel_speed_noise");
            s.read("wheel_speed_noise", est.wheel_speed_noise);
            estimator_ground_noise = s.has("ground_speed_noise");
            s.read("ground_speed_noise", est.ground_speed_noise);
            s.read("measurement_noise_floor", est.measurement_noise_floor);
            s.read("sigma_alpha", est.scaling.alpha);
            s.read("sigma_beta", est.scaling.beta);
            s.read("sigma_kappa", est.scaling.kappa);
            s.read("window", est.adaptation.window);
            s.read("smoothing", est.adaptation.smoothing);
            s.read("min_scale", est.adaptation.min_scale);
            s.read("max_scale", est.adaptation.max_scale);
            s.read("intensity_torque_rate", est.intensity.torque_rate);
            s.read("intensity_acceleration", est.intensity.acceleration);
            s.read("intensity_window", est.intensity_window);
        }
        if (top.has("mapping")) {
            Section s(top.at("mapping"), "mapping");
            s.read("resolution", f.map_resolution);
            s.read("eps_low", f.interpolation.eps_low);
            s.read("eps_mid", f.interpolation.eps_mid);
            s.read("eps_high", f.interpolation.eps_high);
            s.read("w_low", f.interpolation.w_low);
            s.read("w_mid", f.interpolation.w_mid);
            s.read("w_high", f.interpolation.w_high);
        }
    }

    est.vehicle = sc.vehicle;
    est.family = family;
    if (!estimator_wheel_noise) est.wheel_speed_noise = sc.noise.wheel_speed;
    if (!estimator_ground_noise) est.ground_speed_noise = sc.noise.ground_speed;

    try {
        sc.validate();
        f.interpolation.validate();
        if (!(f.map_resolution > 0)) throw Error(ErrorKind::InvalidArgument, "map resolution must be positive");
        if (est.adaptation.window < 2) throw Error(ErrorKind::InvalidArgument, "estimator window must be >= 2");
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        throw Error(ErrorKind::Config, e.message());
    }
    return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open scenario file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

std::string scenario_to_json(const ScenarioFile& f) {
    const ScenarioSpec& sc = f.scenario;
    auto soil = [](const SoilParams& s) {
        return json{{"a", s.a}, {"p", s.p}, {"alpha1", s.alpha1}, {"alpha2", s.alpha2}, {"rho_s", s.rho_s}};
    };
    json j;
    j["seed"] = sc.seed;
    j["duration"] = sc.duration;
    j["target_speed"] = sc.target_speed;
    j["sample_period"] = sc.sample_period;
    j["internal_step"] = sc.internal_step;
    j["vehicle"] = {{"wheel_mass", sc.vehicle.wheel_mass},         {"wheel_inertia", sc.vehicle.wheel_inertia},
                    {"vehicle_mass", sc.vehicle.vehicle_mass},     {"unloaded_radius", sc.vehicle.unloaded_radius},
                    {"tire_pressure", sc.vehicle.tire_pressure},   {"tire_width", sc.vehicle.tire_width},
                    {"tire_rr_coeff", sc.vehicle.tire_rr_coeff},   {"front_axle_share", sc.front_axle_share}};
    j["controller"] = {{"kp", sc.controller.kp},
                       {"ki", sc.controller.ki},
                       {"power_cap", sc.controller.power_cap},
                       {"torque_cap", sc.controller.torque_cap}};
    j["drawbar"] = {{"force", sc.drawbar.force}, {"ramp_time", sc.drawbar.ramp_time}};
    j["noise"] = {{"wheel_speed", sc.noise.wheel_speed}, {"ground_speed", sc.noise.ground_speed},
                  {"torque", sc.noise.torque},           {"front_load", sc.noise.front_load},
                  {"drawbar", sc.noise.drawbar},         {"position", sc.noise.position}};
    j["soil_family"] = {{"p", f.estimator.family.p},
                        {"alpha1", f.estimator.family.alpha1},
                        {"alpha2", f.estimator.family.alpha2}};
    json field = {{"width", sc.field.width}, {"length", sc.field.length}};
    field["default"] = soil(sc.field.default_soil);
    field["default"]["name"] = sc.field.default_name;
    json regions = json::array();
    for (const SoilRegion& r : sc.field.regions) {
        json region = soil(r.soil);
        region["name"] = r.name;
        if (const auto* rect = std::get_if<Rect>(&r.shape)) {
            region["rect"] = {rect->x0, rect->y0, rect->x1, rect->y1};
        } else {
            json poly = json::array();
            for (const Point2& p : std::get<Polygon>(r.shape).vertices) poly.push_back({p.x, p.y});
            region["polygon"] = poly;
        }
        regions.push_back(region);
    }
    field["regions"] = regions;
    j["field"] = field;
    json path = json::array();
    for (const Point2& p : sc.path) path.push_back({p.x, p.y});
    j["path"] = path;
    const EstimatorConfig& e = f.estimator;
    j["estimator"] = {{"adapt_process_noise", e.adapt_process_noise},
                      {"fuzzy_supervision", e.fuzzy_supervision},
                      {"initial_adhesion", e.initial_adhesion},
                      {"initial_soil_resistance", e.initial_soil_resistance},
                      {"initial_speed_std", e.initial_speed_std},
                      {"initial_adhesion_std", e.initial_adhesion_std},
                      {"initial_soil_resistance_std", e.initial_soil_resistance_std},
                      {"speed_process_var", e.speed_process_var},
                      {"adhesion_process_var", e.adhesion_process_var},
                      {"soil_resistance_process_var", e.soil_resistance_process_var},
                      {"wheel_speed_noise", e.wheel_speed_noise},
                      {"ground_speed_noise", e.ground_speed_noise},
                      {"measurement_noise_floor", e.measurement_noise_floor},
                      {"sigma_alpha", e.scaling.alpha},
                      {"sigma_beta", e.scaling.beta},
                      {"sigma_kappa", e.scaling.kappa},
                      {"window", e.adaptation.window},
                      {"smoothing", e.adaptation.smoothing},
                      {"min_scale", e.adaptation.min_scale},
                      {"max_scale", e.adaptation.max_scale},
                      {"intensity_torque_rate", e.intensity.torque_rate},
                      {"intensity_acceleration", e.intensity.acceleration},
                      {"intensity_window", e.intensity_window}};
    j["mapping"] = {{"resolution", f.map_resolution},       {"eps_low", f.interpolation.eps_low},
                    {"eps_mid", f.interpolation.eps_mid},   {"eps_high", f.interpolation.eps_high},
                    {"w_low", f.interpolation.w_low},       {"w_mid", f.interpolation.w_mid},
                    {"w_high", f.interpolation.w_high}};
    return j.dump(2) + "\n";
}

} // namespace traction
