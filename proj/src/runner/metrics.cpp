// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "lit/runner/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "lit/error.hpp"

namespace lit::runner {

using nlohmann::json;

namespace {

std::vector<double> values(const MetricsRow& r) {
    return {r.train_loss,    r.eval_loss,     r.zero_shot_acc, r.recall_i2t_1, r.recall_i2t_5,
            r.recall_i2t_10, r.recall_t2i_1,  r.recall_t2i_5,  r.recall_t2i_10, r.probe_acc,
            r.lr_image,      r.lr_text,       r.wall_ms};
}

}  // namespace

bool MetricsRow::all_finite() const {
    for (double v : values(*this)) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

const std::vector<std::string>& metrics_columns() {
    static const std::vector<std::string> cols = {
        "step",         "train_loss",   "eval_loss",     "zero_shot_acc", "recall_i2t@1",
        "recall_i2t@5", "recall_i2t@10", "recall_t2i@1", "recall_t2i@5",  "recall_t2i@10",
        "probe_acc",    "lr_image",     "lr_text",       "wall_ms"};
    return cols;
}

void to_json(json& j, const MetricsRow& r) {
    const auto& cols = metrics_columns();
    const auto v = values(r);
    j = json::object();
    j[cols[0]] = r.step;
    for (std::size_t i = 0; i < v.size(); ++i) j[cols[i + 1]] = v[i];
}

void from_json(const json& j, MetricsRow& r) {
    const auto& cols = metrics_columns();
    r.step = j.at(cols[0]).get<std::size_t>();
    double* fields[] = {&r.train_loss,    &r.eval_loss,    &r.zero_shot_acc, &r.recall_i2t_1, &r.recall_i2t_5,
                        &r.recall_i2t_10, &r.recall_t2i_1, &r.recall_t2i_5,  &r.recall_t2i_10, &r.probe_acc,
                        &r.lr_image,      &r.lr_text,      &r.wall_ms};
    for (std::size_t i = 0; i < std::size(fields); ++i) *fields[i] = j.at(cols[i + 1]).get<double>();
}

std::string csv_header() {
    std::string out;
    for (const auto& c : metrics_columns()) out += (out.empty() ? "" : ",") + c;
    return out;
}

std::string csv_line(const MetricsRow& row) {
    std::ostringstream os;
    os << row.step << std::setprecision(17);
    for (double v : values(row)) os << ',' << v;
    return os.str();
}

MetricsLog::MetricsLog(const std::filesystem::path& jsonl) : out_(std::in_place, jsonl) {
    if (!*out_) fail(Errc::IoError, "cannot open " + jsonl.string() + " for writing");
}

void MetricsLog::append(const MetricsRow& row) {
    if (!row.all_finite()) fail(Errc::InvalidConfig, "metrics row at step " + std::to_string(row.step) + " is not finite");
    if (!rows_.empty() && row.step <= rows_.back().step) {
        fail(Errc::InvalidConfig, "metrics step " + std::to_string(row.step) + " does not follow " +
                                      std::to_string(rows_.back().step));
    }
    rows_.push_back(row);
    if (out_) {
        *out_ << json(row).dump() << '\n';
        out_->flush();
    }
}

void MetricsLog::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail(Errc::IoError, "cannot open " + path.string() + " for writing");
    out << csv_header() << '\n';
    for (const auto& r : rows_) out << csv_line(r) << '\n';
}

std::vector<MetricsRow> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::IoError, "cannot open " + path.string());
    std::vector<MetricsRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line).get<MetricsRow>());
        } catch (const json::exception& e) {
            fail(Errc::FormatError, std::string("metrics line: ") + e.what());
        }
    }
    return rows;
}

}  // namespace lit::runner
