#include "dsi/evaluation/report.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

#include "dsi/core/fs_util.hpp"

namespace dsi {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) fail(ErrorCode::ManifestMalformed, "not a number: '" + text + "'");
    return v;
}

int parse_int(const std::string& text) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) fail(ErrorCode::ManifestMalformed, "not an integer: '" + text + "'");
    return v;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& expected_header) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::ManifestMalformed, "empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header) {
        fail(ErrorCode::ManifestMalformed, "CSV header '" + line + "', expected '" + expected_header + "'");
    }
    const auto columns = split(expected_header, ',').size();
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (fields.size() != columns) fail(ErrorCode::ManifestMalformed, "CSV row has wrong field count: " + line);
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axes {
    double x0, x1, y0, y1;
    static constexpr double kWidth = 480, kHeight = 360, kMargin = 50;

    double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
    double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

Axes fit_axes(const std::vector<double>& xs, const std::vector<double>& ys) {
    auto range = [](const std::vector<double>& v) {
        double lo = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
        double hi = v.empty() ? 1.0 : *std::max_element(v.begin(), v.end());
        const double pad = std::max(0.05 * (hi - lo), 1e-3);
        return std::pair{lo - pad, hi + pad};
    };
    const auto [x0, x1] = range(xs);
    const auto [y0, y1] = range(ys);
    return {x0, x1, y0, y1};
}

std::string svg_frame(const Axes& axes, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::string& body) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Axes::kWidth << "\" height=\"" << Axes::kHeight
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << Axes::kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\">" << svg_escape(title)
        << "</text>\n";
    out << "<line x1=\"" << Axes::kMargin << "\" y1=\"" << Axes::kHeight - Axes::kMargin << "\" x2=\""
        << Axes::kWidth - Axes::kMargin << "\" y2=\"" << Axes::kHeight - Axes::kMargin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << Axes::kMargin << "\" y1=\"" << Axes::kMargin << "\" x2=\"" << Axes::kMargin << "\" y2=\""
        << Axes::kHeight - Axes::kMargin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << Axes::kWidth / 2 << "\" y=\"" << Axes::kHeight - 12 << "\" text-anchor=\"middle\">"
        << svg_escape(x_label) << " [" << format_double(axes.x0) << ", " << format_double(axes.x1) << "]</text>\n";
    out << "<text x=\"14\" y=\"" << Axes::kHeight / 2 << "\" transform=\"rotate(-90 14 " << Axes::kHeight / 2
        << ")\" text-anchor=\"middle\">" << svg_escape(y_label) << "</text>\n";
    out << body << "</svg>\n";
    return out.str();
}

}  // namespace

ShiftReport build_shift_report(const std::string& shift_name, std::span<const ModelEvaluation> evaluations) {
    ShiftReport report;
    report.shift_name = shift_name;
    report.absolute_impact = absolute_impact(evaluations);
    if (evaluations.front().shift_name != shift_name) {
        fail(ErrorCode::MixedShifts, "evaluations are for shift '" + evaluations.front().shift_name + "'");
    }
    std::set<int> classes;
    std::vector<std::pair<double, double>> xy;
    for (const auto& eval : evaluations) {
        report.points.push_back(ReportPoint{eval.model_id, eval.base_accuracy_same_classes, eval.shift_accuracy, eval.drop});
        classes.insert(eval.eligible_classes.begin(), eval.eligible_classes.end());
    }
    std::sort(report.points.begin(), report.points.end(),
              [](const ReportPoint& a, const ReportPoint& b) { return a.model_id < b.model_id; });
    for (const auto& p : report.points) xy.emplace_back(p.base_acc, p.shift_acc);
    report.n_models = report.points.size();
    report.n_eligible_classes = classes.size();
    try {
        const auto fit = id_ood_slope(xy);
        report.id_ood_slope = fit.slope;
        report.intercept = fit.intercept;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SlopeUndefined) throw;
        report.slope_undefined_reason = e.what();
    }
    return report;
}

std::string report_csv(const ShiftReport& report) {
    std::string out = "model_id,base_acc,shift_acc,drop\n";
    for (const auto& p : report.points) {
        out += p.model_id + "," + format_double(p.base_acc) + "," + format_double(p.shift_acc) + "," +
               format_double(p.drop) + "\n";
    }
    return out;
}

nlohmann::json report_summary(const ShiftReport& report) {
    nlohmann::json j = {
        {"shift", report.shift_name},
        {"absolute_impact", report.absolute_impact},
        {"id_ood_slope", nullptr},
        {"intercept", nullptr},
        {"n_models", report.n_models},
        {"n_eligible_classes", report.n_eligible_classes},
        {"slope_undefined_reason", nullptr},
    };
    if (report.id_ood_slope) j["id_ood_slope"] = *report.id_ood_slope;
    if (report.intercept) j["intercept"] = *report.intercept;
    if (report.slope_undefined_reason) j["slope_undefined_reason"] = *report.slope_undefined_reason;
    return j;
}

ShiftReport report_from_formats(const std::string& csv, const nlohmann::json& summary) {
    ShiftReport report;
    try {
        report.shift_name = summary.at("shift").get<std::string>();
        report.absolute_impact = summary.at("absolute_impact").get<double>();
        if (!summary.at("id_ood_slope").is_null()) report.id_ood_slope = summary.at("id_ood_slope").get<double>();
        if (!summary.at("intercept").is_null()) report.intercept = summary.at("intercept").get<double>();
        if (summary.contains("slope_undefined_reason") && !summary.at("slope_undefined_reason").is_null()) {
            report.slope_undefined_reason = summary.at("slope_undefined_reason").get<std::string>();
        }
        report.n_models = summary.at("n_models").get<std::size_t>();
        report.n_eligible_classes = summary.at("n_eligible_classes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ManifestMalformed, std::string("malformed report summary: ") + e.what());
    }
    for (const auto& row : parse_csv(csv, "model_id,base_acc,shift_acc,drop")) {
        report.points.push_back(ReportPoint{row[0], parse_double(row[1]), parse_double(row[2]), parse_double(row[3])});
    }
    if (report.points.size() != report.n_models) {
        fail(ErrorCode::ManifestMalformed, "report table and summary disagree on the number of models");
    }
    return report;
}

std::string scatter_svg(const ShiftReport& report) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& p : report.points) {
        xs.push_back(p.base_acc);
        ys.push_back(p.shift_acc);
    }
    const auto axes = fit_axes(xs, ys);
    std::ostringstream body;
    for (const auto& p : report.points) {
        body << "<circle cx=\"" << axes.px(p.base_acc) << "\" cy=\"" << axes.py(p.shift_acc)
             << "\" r=\"4\" fill=\"steelblue\"><title>" << svg_escape(p.model_id) << "</title></circle>\n";
    }
    if (report.id_ood_slope && report.intercept) {
        const double a = *report.id_ood_slope;
        const double b = *report.intercept;
        body << "<line x1=\"" << axes.px(axes.x0) << "\" y1=\"" << axes.py(a * axes.x0 + b) << "\" x2=\""
             << axes.px(axes.x1) << "\" y2=\"" << axes.py(a * axes.x1 + b) << "\" stroke=\"firebrick\"/>\n";
    }
    return svg_frame(axes, "shift: " + report.shift_name, "base accuracy", "shift accuracy", body.str());
}

std::string impact_vs_slope_svg(std::span<const ShiftReport> reports) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& r : reports) {
        if (!r.id_ood_slope) continue;
        xs.push_back(r.absolute_impact);
        ys.push_back(*r.id_ood_slope);
    }
    const auto axes = fit_axes(xs, ys);
    std::ostringstream body;
    for (const auto& r : reports) {
        if (!r.id_ood_slope) continue;
        const double x = axes.px(r.absolute_impact);
        const double y = axes.py(*r.id_ood_slope);
        body << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\"darkorange\"/>\n";
        body << "<text x=\"" << x + 6 << "\" y=\"" << y - 6 << "\" font-size=\"10\">" << svg_escape(r.shift_name)
             << "</text>\n";
    }
    return svg_frame(axes, "ID/OOD slope vs absolute impact", "absolute impact", "ID/OOD slope", body.str());
}

void write_shift_report(const ShiftReport& report, const fs::path& dir) {
    write_file_atomic(dir / (report.shift_name + ".csv"), report_csv(report));
    write_file_atomic(dir / (report.shift_name + ".summary.json"), report_summary(report).dump(2) + "\n");
    write_file_atomic(dir / (report.shift_name + ".scatter.svg"), scatter_svg(report));
}

ShiftReport read_shift_report(const fs::path& dir, const std::string& shift_name) {
    return report_from_formats(read_text_file(dir / (shift_name + ".csv")),
                               read_json_file(dir / (shift_name + ".summary.json")));
}

std::string predictions_csv(const PredictionSet& predictions) {
    std::string out = "sample_id,true_class,predicted_class\n";
    for (const auto& e : predictions.entries) {
        out += e.sample_id + "," + std::to_string(e.true_class) + "," + std::to_string(e.predicted_class) + "\n";
    }
    return out;
}

PredictionSet parse_predictions_csv(const std::string& model_id, const std::string& csv) {
    PredictionSet set{model_id, {}};
    for (const auto& row : parse_csv(csv, "sample_id,true_class,predicted_class")) {
        set.entries.push_back(PredictionEntry{row[0], parse_int(row[1]), parse_int(row[2])});
    }
    validate(set);
    return set;
}

PredictionRun read_prediction_run(const fs::path& manifest_path) {
    const auto manifest = read_json_file(manifest_path);
    PredictionRun run;
    fs::path csv_path;
    try {
        run.model_id = manifest.at("model_id").get<std::string>();
        run.shift_name = manifest.at("shift").get<std::string>();
        csv_path = manifest.at("predictions").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ManifestMalformed, manifest_path.string() + ": " + e.what());
    }
    if (csv_path.is_relative()) csv_path = manifest_path.parent_path() / csv_path;
    run.predictions = parse_predictions_csv(run.model_id, read_text_file(csv_path));
    return run;
}

void write_prediction_run(const PredictionRun& run, const fs::path& manifest_path) {
    const auto csv_name = manifest_path.stem().string() + ".csv";
    write_file_atomic(manifest_path.parent_path() / csv_name, predictions_csv(run.predictions));
    const nlohmann::json manifest = {{"model_id", run.model_id}, {"shift", run.shift_name}, {"predictions", csv_name}};
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

}  // namespace dsi
