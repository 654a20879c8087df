#include "cubevid/mapping.hpp"
#include "cubevid/transform.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cubevid {

std::vector<ChannelGroup> plan_stream(const MappingRule& rule, std::size_t n_channels)
{
    const std::size_t n = rule.n_pcs > 0 ? rule.n_pcs : n_channels;
    if (n == 0) {
        throw ConfigError("stream '" + rule.stream_name + "' has no channels to encode");
    }
    std::vector<ChannelGroup> groups;
    groups.reserve((n + 2) / 3);
    for (std::size_t first = 0; first < n; first += 3) {
        ChannelGroup g;
        g.video_index = groups.size() + 1;
        g.n_real = std::min<std::size_t>(3, n - first);
        for (std::size_t s = 0; s < 3; ++s) {
            g.members[s] = first + std::min(s, g.n_real - 1);
        }
        groups.push_back(g);
    }
    return groups;
}

std::size_t ValidatedPlan::video_count() const
{
    std::size_t n = 0;
    for (const auto& s : streams) {
        n += s.groups.size();
    }
    return n;
}

namespace {

void check_stream_name(const std::string& name)
{
    if (name.empty()) {
        throw ConfigError("stream name must not be empty");
    }
    const bool ok = std::all_of(name.begin(), name.end(), [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_' ||
               ch == '-' || ch == '.';
    });
    if (!ok || name.front() == '.') {
        throw ConfigError("stream name '" + name + "' may only contain letters, digits, '_', '-' and '.'");
    }
}

} // namespace

ValidatedPlan validate_rules(const std::vector<MappingRule>& rules, const DataCube& cube)
{
    ValidatedPlan plan;
    std::set<std::string> stream_names;
    std::map<std::string, std::string> claimed; // variable -> stream

    for (const auto& rule : rules) {
        check_stream_name(rule.stream_name);
        if (!stream_names.insert(rule.stream_name).second) {
            throw ConfigError("stream name '" + rule.stream_name + "' used by two rules");
        }
        for (const auto& var : rule.input_vars) {
            if (!cube.has_variable(var)) {
                throw NotFoundError("stream '" + rule.stream_name + "' references unknown variable '" + var + "'");
            }
            const auto [it, fresh] = claimed.emplace(var, rule.stream_name);
            if (!fresh && it->second != rule.stream_name) {
                throw ConfigError("variable '" + var + "' is claimed by both '" + it->second + "' and '" +
                                  rule.stream_name + "'");
            }
        }
        if (!is_supported_bit_depth(rule.bit_depth)) {
            throw ConfigError("stream '" + rule.stream_name + "': bit depth " + std::to_string(rule.bit_depth) +
                              " is not one of 8, 10, 12, 16");
        }

        StreamPlan sp;
        sp.rule = rule;
        sp.channels = resolve_channels(cube, rule.input_vars, rule.axes);
        {
            const auto& first = cube.variable(sp.channels.front().variable);
            for (const auto& axis : {rule.axes.time, rule.axes.y, rule.axes.x}) {
                const auto pos = std::find(first.axes.begin(), first.axes.end(), axis) - first.axes.begin();
                sp.tyx.push_back(first.values.dim(static_cast<std::size_t>(pos)));
            }
        }
        if (rule.n_pcs > sp.channels.size()) {
            throw ConfigError("stream '" + rule.stream_name + "' keeps " + std::to_string(rule.n_pcs) +
                              " principal components but has only " + std::to_string(sp.channels.size()) +
                              " channels");
        }
        sp.groups = plan_stream(rule, sp.channels.size());

        if (rule.codec_configs.empty()) {
            throw ConfigError("stream '" + rule.stream_name + "' has no codec configuration");
        }
        if (rule.codec_configs.size() != 1 && rule.codec_configs.size() != sp.groups.size()) {
            throw ConfigError("stream '" + rule.stream_name + "' lists " + std::to_string(rule.codec_configs.size()) +
                              " codec configurations for " + std::to_string(sp.groups.size()) + " videos");
        }
        if (!rule.qualities.empty() && rule.qualities.size() != sp.groups.size()) {
            throw ConfigError("stream '" + rule.stream_name + "' lists " + std::to_string(rule.qualities.size()) +
                              " quality labels for " + std::to_string(sp.groups.size()) + " videos");
        }
        for (std::size_t v = 0; v < sp.groups.size(); ++v) {
            CodecConfig cfg = rule.codec_configs.size() == 1 ? rule.codec_configs.front() : rule.codec_configs[v];
            cfg.bit_depth = rule.bit_depth;
            try {
                check_supported(cfg);
            } catch (const ConfigError& e) {
                throw ConfigError("stream '" + rule.stream_name + "': " + e.what());
            }
            sp.video_configs.push_back(std::move(cfg));
        }
        if (rule.monochrome) {
            if (sp.coded_channels() != 1) {
                throw ConfigError("stream '" + rule.stream_name + "': monochrome output needs exactly one channel");
            }
            if (!probe_capabilities(sp.video_configs.front().codec).monochrome) {
                throw ConfigError("stream '" + rule.stream_name + "': " +
                                  std::string(codec_name(sp.video_configs.front().codec)) +
                                  " has no monochrome pixel format");
            }
        }
        plan.streams.push_back(std::move(sp));
    }

    for (const auto& name : cube.variable_names()) {
        if (!claimed.contains(name)) {
            plan.residual_variables.push_back(name);
        }
    }
    return plan;
}

// --- rules documents ---------------------------------------------------------

namespace {

std::vector<std::string> string_list(const YAML::Node& node, const std::string& what)
{
    if (node.IsScalar()) {
        return {node.as<std::string>()};
    }
    if (!node.IsSequence()) {
        throw ConfigError(what + " must be a name or a list of names");
    }
    std::vector<std::string> out;
    for (const auto& item : node) {
        out.push_back(item.as<std::string>());
    }
    return out;
}

AxisOrder axis_order(const YAML::Node& node, const std::string& stream)
{
    const auto names = string_list(node, "axes of '" + stream + "'");
    if (names.size() != 3) {
        throw ConfigError("axes of '" + stream + "' must name exactly the time, y and x axes");
    }
    return {names[0], names[1], names[2]};
}

CodecConfig codec_config(const YAML::Node& node, int bit_depth, const std::string& stream)
{
    if (!node.IsMap()) {
        throw ConfigError("codec configuration of '" + stream + "' must be a mapping of options");
    }
    CodecOptions options;
    for (const auto& kv : node) {
        options.emplace_back(kv.first.as<std::string>(), kv.second.as<std::string>());
    }
    return make_codec_config(std::move(options), bit_depth);
}

std::vector<CodecConfig> codec_configs(const YAML::Node& node, int bit_depth, const std::string& stream)
{
    if (node.IsSequence()) {
        std::vector<CodecConfig> out;
        for (const auto& item : node) {
            out.push_back(codec_config(item, bit_depth, stream));
        }
        return out;
    }
    return {codec_config(node, bit_depth, stream)};
}

MappingRule parse_rule(const std::string& name, const YAML::Node& body)
{
    MappingRule rule;
    rule.stream_name = name;
    if (body.IsSequence()) {
        if (body.size() != 5) {
            throw ConfigError("rule '" + name + "' must have 5 entries: vars, axes, n_pcs, codec, bit_depth");
        }
        rule.input_vars = string_list(body[0], "input variables of '" + name + "'");
        rule.axes = axis_order(body[1], name);
        rule.n_pcs = body[2].as<std::size_t>();
        rule.bit_depth = body[4].as<int>();
        rule.codec_configs = codec_configs(body[3], rule.bit_depth, name);
        return rule;
    }
    if (!body.IsMap()) {
        throw ConfigError("rule '" + name + "' must be a list or a mapping");
    }
    static const std::set<std::string> known = {"input_vars", "axes", "n_pcs", "codec", "bit_depth",
                                                "leading_fill", "clamp", "monochrome", "qualities"};
    for (const auto& kv : body) {
        const auto key = kv.first.as<std::string>();
        if (!known.contains(key)) {
            throw ConfigError("rule '" + name + "' has unknown key '" + key + "'");
        }
    }
    for (const char* required : {"input_vars", "codec", "bit_depth"}) {
        if (!body[required]) {
            throw ConfigError("rule '" + name + "' is missing '" + required + "'");
        }
    }
    rule.input_vars = string_list(body["input_vars"], "input_vars of '" + name + "'");
    if (body["axes"]) {
        rule.axes = axis_order(body["axes"], name);
    }
    rule.n_pcs = body["n_pcs"] ? body["n_pcs"].as<std::size_t>() : 0;
    rule.bit_depth = body["bit_depth"].as<int>();
    rule.codec_configs = codec_configs(body["codec"], rule.bit_depth, name);
    if (body["leading_fill"]) {
        rule.leading_fill = body["leading_fill"].as<double>();
    }
    if (body["clamp"]) {
        rule.clamp = body["clamp"].as<bool>();
    }
    if (body["monochrome"]) {
        rule.monochrome = body["monochrome"].as<bool>();
    }
    if (body["qualities"]) {
        rule.qualities = string_list(body["qualities"], "qualities of '" + name + "'");
    }
    return rule;
}

} // namespace

std::vector<MappingRule> parse_rules(const std::string& text)
{
    std::vector<MappingRule> rules;
    try {
        const YAML::Node root = YAML::Load(text);
        if (!root || root.IsNull()) {
            return rules;
        }
        if (!root.IsMap()) {
            throw ConfigError("rules document must map stream names to rules");
        }
        for (const auto& kv : root) {
            rules.push_back(parse_rule(kv.first.as<std::string>(), kv.second));
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed rules document: ") + e.what());
    }
    return rules;
}

std::vector<MappingRule> load_rules(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw NotFoundError("cannot open rules file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_rules(buffer.str());
}

} // namespace cubevid
