#pragma once

#include "cubevid/codec.hpp"
#include "cubevid/cube.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace cubevid {

/// Recipe turning some cube variables into one named stream of videos.
struct MappingRule {
    std::string stream_name;
    std::vector<std::string> input_vars;
    AxisOrder axes;
    std::size_t n_pcs = 0;                 // 0 disables PCA
    std::vector<CodecConfig> codec_configs; // one (replicated) or one per video
    int bit_depth = 8;

    double leading_fill = 0.0; // NaNs with no earlier valid value along time
    bool clamp = false;        // clamp out-of-range values instead of failing
    bool monochrome = false;   // single-plane pixel format for 1-channel streams
    std::vector<std::string> qualities; // optional preset label per video, for reports

    friend bool operator==(const MappingRule&, const MappingRule&) = default;
};

/// Three plane slots of one video. Slots hold 0-based channel indices of the
/// stream; slots past n_real repeat the last real channel.
struct ChannelGroup {
    std::size_t video_index = 1; // 1-based, as in the file name
    std::array<std::size_t, 3> members{};
    std::size_t n_real = 0;

    friend bool operator==(const ChannelGroup&, const ChannelGroup&) = default;
};

/// ceil(n/3) groups over the rule's coded channels (n_pcs when PCA is on).
std::vector<ChannelGroup> plan_stream(const MappingRule& rule, std::size_t n_channels);

struct StreamPlan {
    MappingRule rule;
    std::vector<ChannelSource> channels;  // input channels, stacking order
    std::vector<ChannelGroup> groups;
    std::vector<CodecConfig> video_configs; // resolved, one per group
    Shape tyx;                             // shared time, y, x lengths

    std::size_t coded_channels() const { return rule.n_pcs > 0 ? rule.n_pcs : channels.size(); }

    friend bool operator==(const StreamPlan&, const StreamPlan&) = default;
};

struct ValidatedPlan {
    std::vector<StreamPlan> streams;
    std::vector<std::string> residual_variables; // not claimed by any rule

    std::size_t video_count() const;

    friend bool operator==(const ValidatedPlan&, const ValidatedPlan&) = default;
};

/// Checks rules against the cube and resolves the full packing plan.
/// Throws NotFoundError for unknown variables and ConfigError for
/// overlapping claims, duplicate or malformed stream names, n_pcs beyond the
/// channel count, codec-list length mismatches and unsupported bit depths.
ValidatedPlan validate_rules(const std::vector<MappingRule>& rules, const DataCube& cube);

/// Rules document (YAML or JSON). Each top-level key is a stream name mapped
/// either to a Listing-1 style tuple
///   [vars, [t, y, x], n_pcs, {codec options} | [{...}, ...], bit_depth]
/// or to a mapping with keys input_vars, axes, n_pcs, codec, bit_depth and the
/// optional leading_fill, clamp, monochrome, qualities. See docs/formats.md.
std::vector<MappingRule> parse_rules(const std::string& text);
std::vector<MappingRule> load_rules(const std::filesystem::path& path);

} // namespace cubevid
