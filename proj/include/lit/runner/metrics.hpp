// Copyright (c) 2026, The lit-desk Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include <json.hpp>

namespace lit::runner {

struct MetricsRow {
    std::size_t step = 0;
    double train_loss = 0.0;
    double eval_loss = 0.0;  // contrastive loss on the held-out retrieval split
    double zero_shot_acc = 0.0;
    double recall_i2t_1 = 0.0;
    double recall_i2t_5 = 0.0;
    double recall_i2t_10 = 0.0;
    double recall_t2i_1 = 0.0;
    double recall_t2i_5 = 0.0;
    double recall_t2i_10 = 0.0;
    double probe_acc = 0.0;
    double lr_image = 0.0;
    double lr_text = 0.0;
    double wall_ms = 0.0;

    bool all_finite() const;
    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

void to_json(nlohmann::json& j, const MetricsRow& row);
void from_json(const nlohmann::json& j, MetricsRow& row);

/// Column order of the CSV summary.
const std::vector<std::string>& metrics_columns();
std::string csv_header();
std::string csv_line(const MetricsRow& row);

/// Append-only stream: each row must be finite and have a larger step than
/// the previous one (InvalidConfig otherwise).
class MetricsLog {
   public:
    MetricsLog() = default;
    /// Also writes each row to `jsonl` as it arrives.
    explicit MetricsLog(const std::filesystem::path& jsonl);

    void append(const MetricsRow& row);
    const std::vector<MetricsRow>& rows() const noexcept { return rows_; }
    void write_csv(const std::filesystem::path& path) const;

   private:
    std::vector<MetricsRow> rows_;
    std::optional<std::ofstream> out_;
};

std::vector<MetricsRow> read_jsonl(const std::filesystem::path& path);

}  // namespace lit::runner
