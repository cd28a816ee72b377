#include "elastic/controllers.hpp"

#include "text_util.hpp"

#include <fstream>
#include <sstream>

namespace elastic {

namespace {

constexpr std::string_view magic = "elastic-qtable 1";

std::string_view encoder_tag(EncoderVersion e)
{
    return e == EncoderVersion::v1 ? "v1" : "v2";
}

class Reader {
public:
    Reader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

    std::string line()
    {
        std::string text;
        if (!std::getline(in_, text))
            fail("unexpected end of file");
        ++line_no_;
        return std::string(detail::strip_cr(text));
    }

    std::string keyed(std::string_view key)
    {
        auto text = line();
        if (text.rfind(std::string(key) + " ", 0) != 0)
            fail("expected '" + std::string(key) + "'");
        return text.substr(key.size() + 1);
    }

    template <typename T>
    std::vector<T> row(std::size_t expected)
    {
        std::vector<T> out;
        out.reserve(expected);
        const std::string text = line();
        for (auto field : detail::split(text, ' ')) {
            auto v = detail::parse_number<T>(field);
            if (!v)
                fail("malformed number");
            out.push_back(*v);
        }
        if (out.size() != expected)
            fail("expected " + std::to_string(expected) + " entries");
        return out;
    }

    [[noreturn]] void fail(const std::string& why) const
    {
        throw Error("q-table " + origin_ + " line " + std::to_string(line_no_) + ": " + why);
    }

private:
    std::istream& in_;
    std::string origin_;
    std::size_t line_no_ = 0;
};

} // namespace

void qtable_save(const QTable& table, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write q-table " + path.string());
    out << magic << '\n'
        << "encoder " << encoder_tag(table.encoder()) << '\n'
        << "states " << table.state_count() << '\n'
        << "actions " << table.action_count() << '\n'
        << "values\n";
    for (std::size_t s = 0; s < table.state_count(); ++s) {
        for (std::size_t a = 0; a < table.action_count(); ++a)
            out << (a ? " " : "") << detail::format_double(table.value(s, a));
        out << '\n';
    }
    out << "visits\n";
    for (std::size_t s = 0; s < table.state_count(); ++s) {
        for (std::size_t a = 0; a < table.action_count(); ++a)
            out << (a ? " " : "") << table.visits(s, a);
        out << '\n';
    }
    if (!out)
        throw Error("failed writing q-table " + path.string());
}

QTable qtable_load(const std::filesystem::path& path, EncoderVersion expected_encoder, std::size_t expected_actions)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open q-table " + path.string());
    Reader r(in, path.string());

    if (r.line() != magic)
        r.fail("not a q-table file");
    const auto encoder_text = r.keyed("encoder");
    if (encoder_text != "v1" && encoder_text != "v2")
        r.fail("unknown encoder '" + encoder_text + "'");
    const auto encoder = encoder_text == "v1" ? EncoderVersion::v1 : EncoderVersion::v2;
    auto states = detail::parse_number<std::size_t>(r.keyed("states"));
    auto actions = detail::parse_number<std::size_t>(r.keyed("actions"));
    if (!states || !actions)
        r.fail("malformed dimensions");

    const std::size_t expected_states = state_count(expected_encoder, expected_actions);
    if (encoder != expected_encoder || *states != expected_states || *actions != expected_actions) {
        std::ostringstream why;
        why << "q-table " << path.string() << " has encoder " << encoder_text << " with " << *states << " states x "
            << *actions << " actions, but this experiment needs encoder " << encoder_tag(expected_encoder)
            << " with " << expected_states << " x " << expected_actions << "; refusing to load";
        throw Error(why.str());
    }
    if (*states != state_count(encoder, *actions))
        r.fail("state count inconsistent with encoder");

    QTable table(encoder, *states, *actions);
    if (r.line() != "values")
        r.fail("expected 'values'");
    std::vector<std::vector<double>> values;
    for (std::size_t s = 0; s < *states; ++s)
        values.push_back(r.row<double>(*actions));
    if (r.line() != "visits")
        r.fail("expected 'visits'");
    for (std::size_t s = 0; s < *states; ++s) {
        auto visits = r.row<std::uint64_t>(*actions);
        for (std::size_t a = 0; a < *actions; ++a)
            table.set(s, a, values[s][a], visits[a]);
    }
    return table;
}

QTable qtable_load_or_zero(const std::filesystem::path& path, EncoderVersion encoder, std::size_t actions)
{
    if (path.empty() || !std::filesystem::exists(path))
        return QTable(encoder, state_count(encoder, actions), actions);
    return qtable_load(path, encoder, actions);
}

} // namespace elastic
