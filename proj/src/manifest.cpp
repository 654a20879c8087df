#include "cubevid/manifest.hpp"

#include "json_util.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

namespace cubevid {

using detail::json;

std::uint64_t StreamEntry::bytes() const
{
    return std::accumulate(videos.begin(), videos.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const VideoEntry& v) { return acc + v.bytes; });
}

namespace {

json codec_to_json(const CodecConfig& c)
{
    json options = json::array();
    for (const auto& [k, v] : c.options) {
        options.push_back(json::array({k, v}));
    }
    return {{"codec", std::string(codec_name(c.codec))},
            {"options", options},
            {"bit_depth", c.bit_depth},
            {"lossless", c.lossless()}};
}

CodecConfig codec_from_json(const json& j)
{
    CodecConfig c;
    c.codec = codec_from_name(j.at("codec").get<std::string>());
    for (const auto& pair : j.at("options")) {
        c.options.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    }
    c.bit_depth = j.at("bit_depth").get<int>();
    return c;
}

json quant_to_json(const QuantParams& q)
{
    json channels = json::array();
    for (const auto& r : q.channels) {
        channels.push_back({{"min", detail::double_to_json(r.min)}, {"max", detail::double_to_json(r.max)}});
    }
    return {{"bit_depth", q.bit_depth}, {"channels", channels}};
}

QuantParams quant_from_json(const json& j)
{
    QuantParams q;
    q.bit_depth = j.at("bit_depth").get<int>();
    for (const auto& r : j.at("channels")) {
        q.channels.push_back({detail::double_from_json(r.at("min")), detail::double_from_json(r.at("max"))});
    }
    return q;
}

json pca_to_json(const PcaModel& m)
{
    json rows = json::array();
    for (std::size_t k = 0; k < m.n_components(); ++k) {
        rows.push_back(detail::doubles_to_json(
            std::span<const double>(m.components.data() + k * m.n_channels(), m.n_channels())));
    }
    return {{"mean", detail::doubles_to_json(m.mean)},
            {"components", rows},
            {"explained_variance", detail::doubles_to_json(m.explained_variance)},
            {"total_variance", detail::double_to_json(m.total_variance)},
            {"per_component_quality", m.per_component_quality}};
}

PcaModel pca_from_json(const json& j)
{
    PcaModel m;
    m.mean = detail::doubles_from_json(j.at("mean"));
    for (const auto& row : j.at("components")) {
        const auto r = detail::doubles_from_json(row);
        if (r.size() != m.mean.size()) {
            throw FormatError("PCA component row has " + std::to_string(r.size()) + " entries, expected " +
                              std::to_string(m.mean.size()));
        }
        m.components.insert(m.components.end(), r.begin(), r.end());
    }
    m.explained_variance = detail::doubles_from_json(j.at("explained_variance"));
    if (m.explained_variance.size() * m.mean.size() != m.components.size()) {
        throw FormatError("PCA model has inconsistent component count");
    }
    m.total_variance = detail::double_from_json(j.at("total_variance"));
    m.per_component_quality = j.value("per_component_quality", std::vector<std::string>{});
    return m;
}

json stream_to_json(const StreamEntry& s)
{
    json variables = json::array();
    for (const auto& v : s.variables) {
        variables.push_back({{"name", v.name},
                             {"axes", v.axes},
                             {"shape", v.shape},
                             {"dtype", std::string(dtype_name(v.dtype))},
                             {"attrs", detail::attrs_to_json(v.attrs)}});
    }
    json channels = json::array();
    for (const auto& c : s.channels) {
        channels.push_back({{"variable", c.variable},
                            {"channel_axis", c.channel_axis ? json(*c.channel_axis) : json(nullptr)},
                            {"channel_index", c.channel_index}});
    }
    json videos = json::array();
    for (const auto& v : s.videos) {
        videos.push_back({{"file", v.file},
                          {"index", v.index},
                          {"members", v.members},
                          {"n_real", v.n_real},
                          {"planes", v.planes},
                          {"pixel_format", v.pixel_format},
                          {"codec", codec_to_json(v.codec)},
                          {"bytes", v.bytes},
                          {"quality", v.quality}});
    }
    return {{"name", s.name},
            {"variables", variables},
            {"axes", {{"time", s.axes.time}, {"y", s.axes.y}, {"x", s.axes.x}}},
            {"channels", channels},
            {"frames", s.frames},
            {"height", s.height},
            {"width", s.width},
            {"bit_depth", s.bit_depth},
            {"quant", quant_to_json(s.quant)},
            {"pca", s.pca ? pca_to_json(*s.pca) : json(nullptr)},
            {"fill",
             {{"policy", s.fill.policy},
              {"leading_fill", detail::double_to_json(s.fill.leading_fill)},
              {"masks", s.fill.masks},
              {"synthesized", s.fill.synthesized}}},
            {"clamp", s.clamp},
            {"videos", videos}};
}

StreamEntry stream_from_json(const json& j)
{
    StreamEntry s;
    s.name = j.at("name").get<std::string>();
    for (const auto& v : j.at("variables")) {
        s.variables.push_back({v.at("name").get<std::string>(), v.at("axes").get<std::vector<std::string>>(),
                               v.at("shape").get<Shape>(), dtype_from_name(v.at("dtype").get<std::string>()),
                               detail::attrs_from_json(v.at("attrs"))});
    }
    const auto& axes = j.at("axes");
    s.axes = {axes.at("time").get<std::string>(), axes.at("y").get<std::string>(), axes.at("x").get<std::string>()};
    for (const auto& c : j.at("channels")) {
        ChannelSource src;
        src.variable = c.at("variable").get<std::string>();
        if (!c.at("channel_axis").is_null()) {
            src.channel_axis = c.at("channel_axis").get<std::string>();
        }
        src.channel_index = c.at("channel_index").get<std::size_t>();
        s.channels.push_back(std::move(src));
    }
    s.frames = j.at("frames").get<std::size_t>();
    s.height = j.at("height").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    s.bit_depth = j.at("bit_depth").get<int>();
    s.quant = quant_from_json(j.at("quant"));
    if (!j.at("pca").is_null()) {
        s.pca = pca_from_json(j.at("pca"));
    }
    const auto& fill = j.at("fill");
    s.fill.policy = fill.at("policy").get<std::string>();
    s.fill.leading_fill = detail::double_from_json(fill.at("leading_fill"));
    s.fill.masks = fill.at("masks").get<std::map<std::string, std::string>>();
    s.fill.synthesized = fill.at("synthesized").get<std::uint64_t>();
    s.clamp = j.at("clamp").get<bool>();
    for (const auto& v : j.at("videos")) {
        VideoEntry e;
        e.file = v.at("file").get<std::string>();
        e.index = v.at("index").get<std::size_t>();
        e.members = v.at("members").get<std::array<std::size_t, 3>>();
        e.n_real = v.at("n_real").get<std::size_t>();
        e.planes = v.at("planes").get<std::size_t>();
        e.pixel_format = v.at("pixel_format").get<std::string>();
        e.codec = codec_from_json(v.at("codec"));
        e.bytes = v.at("bytes").get<std::uint64_t>();
        e.quality = v.value("quality", std::string());
        if (e.n_real < 1 || e.n_real > 3) {
            throw FormatError("video " + e.file + " has n_real " + std::to_string(e.n_real));
        }
        s.videos.push_back(std::move(e));
    }
    return s;
}

} // namespace

std::string manifest_to_json(const Manifest& m)
{
    json streams = json::array();
    for (const auto& s : m.streams) {
        streams.push_back(stream_to_json(s));
    }
    const json doc = {{"format_version", m.format_version},
                      {"residual", m.residual},
                      {"attrs", detail::attrs_to_json(m.attrs)},
                      {"streams", streams}};
    return doc.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text)
{
    try {
        const json doc = json::parse(text);
        Manifest m;
        m.format_version = doc.at("format_version").get<std::string>();
        const auto major = m.format_version.substr(0, m.format_version.find('.'));
        const std::string ours(k_manifest_version);
        if (major != ours.substr(0, ours.find('.'))) {
            throw FormatError("unsupported manifest version " + m.format_version + " (this reader handles " + ours +
                              ")");
        }
        m.residual = doc.at("residual").get<std::string>();
        m.attrs = detail::attrs_from_json(doc.at("attrs"));
        for (const auto& s : doc.at("streams")) {
            m.streams.push_back(stream_from_json(s));
        }
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << manifest_to_json(manifest);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

Manifest read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("no manifest at " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return manifest_from_json(buffer.str());
}

} // namespace cubevid
