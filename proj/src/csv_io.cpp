#include "traction/csv_io.hpp"

#include "traction/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cstdlib>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

namespace traction {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string header_with(std::string_view prefix, int count, int first = 1) {
    std::string out;
    for (int i = 0; i < count; ++i) out += fmt::format(",{}{}", prefix, first + i);
    return out;
}

class RowReader {
public:
    RowReader(std::istream& in, std::string_view what, std::size_t columns)
        : in_(in), what_(what), columns_(columns) {
        std::string header;
        if (!std::getline(in_, header)) throw Error(ErrorKind::Io, std::string(what_) + " CSV is empty");
    }

    bool next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            fields_.clear();
            std::size_t start = 0;
            while (true) {
                const auto comma = line.find(',', start);
                fields_.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            if (fields_.size() != columns_) {
                throw Error(ErrorKind::Io, fmt::format("{} CSV row {} has {} columns, expected {}", what_,
                                                       line_no_ + 1, fields_.size(), columns_));
            }
            cursor_ = 0;
            return true;
        }
        return false;
    }

    std::optional<double> optional_number() {
        const std::string& f = fields_.at(cursor_++);
        if (f.empty()) return std::nullopt;
        char* end = nullptr;
        const double v = std::strtod(f.c_str(), &end);
        if (end != f.c_str() + f.size()) {
            throw Error(ErrorKind::Io, fmt::format("{} CSV row {}: '{}' is not a number", what_, line_no_ + 1, f));
        }
        return v;
    }

    double number() {
        if (auto v = optional_number()) return *v;
        throw Error(ErrorKind::Io, fmt::format("{} CSV row {}: missing value", what_, line_no_ + 1));
    }

private:
    std::istream& in_;
    std::string_view what_;
    std::size_t columns_;
    std::vector<std::string> fields_;
    std::size_t cursor_ = 0;
    std::size_t line_no_ = 0;
};

} // namespace

void write_telemetry_csv(std::ostream& out, std::span<const TelemetrySample> samples) {
    out << "t,x,y" << header_with("omega", 4) << ",v" << header_with("torque", 4) << ",front_axle_load,drawbar_pull\n";
    for (const auto& s : samples) {
        std::string row = fmt::format("{},{},{}", num(s.t), num(s.position.x), num(s.position.y));
        for (double w : s.wheel_speed) row += "," + num(w);
        row += "," + num(s.ground_speed);
        for (double m : s.drive_torque) row += "," + num(m);
        row += "," + num(s.front_axle_load) + "," + num(s.drawbar_pull) + "\n";
        out << row;
    }
}

std::vector<TelemetrySample> read_telemetry_csv(std::istream& in) {
    RowReader reader(in, "telemetry", 14);
    std::vector<TelemetrySample> out;
    while (reader.next()) {
        TelemetrySample s;
        s.t = reader.number();
        s.position = {reader.number(), reader.number()};
        for (double& w : s.wheel_speed) w = reader.number();
        s.ground_speed = reader.number();
        for (double& m : s.drive_torque) m = reader.number();
        s.front_axle_load = reader.number();
        s.drawbar_pull = reader.number();
        out.push_back(s);
    }
    return out;
}

void write_truth_csv(std::ostream& out, std::span<const TruthRecord> truth) {
    out << "t,x,y,soil_index,a,p,alpha1,alpha2,rho_s" << header_with("mu", 4) << header_with("slip", 4) << ",v"
        << header_with("omega", 4) << ",drive_energy,drawbar_work\n";
    for (const auto& r : truth) {
        std::string row = fmt::format("{},{},{},{},{},{},{},{},{}", num(r.t), num(r.position.x), num(r.position.y),
                                      r.soil_index, num(r.soil.a), num(r.soil.p), num(r.soil.alpha1),
                                      num(r.soil.alpha2), num(r.soil.rho_s));
        for (double m : r.adhesion) row += "," + num(m);
        for (double s : r.slip) row += "," + num(s);
        row += "," + num(r.ground_speed);
        for (double w : r.wheel_speed) row += "," + num(w);
        row += "," + num(r.drive_energy) + "," + num(r.drawbar_work) + "\n";
        out << row;
    }
}

std::vector<TruthRecord> read_truth_csv(std::istream& in) {
    RowReader reader(in, "truth", 24);
    std::vector<TruthRecord> out;
    while (reader.next()) {
        TruthRecord r;
        r.t = reader.number();
        r.position = {reader.number(), reader.number()};
        r.soil_index = static_cast<int>(reader.number());
        r.soil.a = reader.number();
        r.soil.p = reader.number();
        r.soil.alpha1 = reader.number();
        r.soil.alpha2 = reader.number();
        r.soil.rho_s = reader.number();
        for (double& m : r.adhesion) m = reader.number();
        for (double& s : r.slip) s = reader.number();
        r.ground_speed = reader.number();
        for (double& w : r.wheel_speed) w = reader.number();
        r.drive_energy = reader.number();
        r.drawbar_work = reader.number();
        out.push_back(r);
    }
    return out;
}

void write_estimates_csv(std::ostream& out, std::span<const EstimateRecord> estimates) {
    out << "t,x,y" << header_with("mu", 4) << ",rho_s" << header_with("slip", 4) << ",a,phi"
        << header_with("var", TractionState::kDim, 0) << "\n";
    for (const auto& e : estimates) {
        std::string row = fmt::format("{},{},{}", num(e.t), num(e.position.x), num(e.position.y));
        for (double m : e.adhesion) row += "," + num(m);
        row += "," + num(e.soil_resistance);
        for (double s : e.slip) row += "," + num(s);
        row += "," + (e.curve_scale ? num(*e.curve_scale) : std::string());
        row += "," + num(e.fuzzy_factor);
        for (double v : e.cov_diagonal) row += "," + num(v);
        out << row << "\n";
    }
}

std::vector<EstimateRecord> read_estimates_csv(std::istream& in) {
    RowReader reader(in, "estimates", 3 + 4 + 1 + 4 + 2 + TractionState::kDim);
    std::vector<EstimateRecord> out;
    while (reader.next()) {
        EstimateRecord e;
        e.t = reader.number();
        e.position = {reader.number(), reader.number()};
        for (double& m : e.adhesion) m = reader.number();
        e.soil_resistance = reader.number();
        for (double& s : e.slip) s = reader.number();
        e.curve_scale = reader.optional_number();
        e.fuzzy_factor = reader.number();
        for (double& v : e.cov_diagonal) v = reader.number();
        out.push_back(e);
    }
    return out;
}

void write_series_csv(std::ostream& out, std::span<const EstimateRecord> estimates,
                      std::span<const TruthRecord> truth) {
    if (estimates.size() != truth.size()) throw Error(ErrorKind::InvalidArgument, "series logs differ in length");
    out << "t" << header_with("mu_true", 4) << header_with("mu_est", 4) << ",rho_s_true,rho_s_est,a_true,a_est\n";
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const auto& e = estimates[k];
        const auto& r = truth[k];
        std::string row = num(r.t);
        for (double m : r.adhesion) row += "," + num(m);
        for (double m : e.adhesion) row += "," + num(m);
        row += "," + num(r.soil.rho_s) + "," + num(e.soil_resistance) + "," + num(r.soil.a) + "," +
               (e.curve_scale ? num(*e.curve_scale) : std::string());
        out << row << "\n";
    }
}

} // namespace traction
