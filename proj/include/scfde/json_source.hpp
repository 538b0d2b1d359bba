#pragma once

// JSON document that remembers the source line of every key and array
// element, so validation errors can point at the offending line.

#include <cstddef>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scfde/error.hpp"

namespace scfde {

using json = nlohmann::json;

namespace detail {

struct LineCountingIterator {
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    const char* pos = nullptr;
    std::size_t* line = nullptr;

    reference operator*() const { return *pos; }
    LineCountingIterator& operator++() {
        if (*pos == '\n') ++*line;
        ++pos;
        return *this;
    }
    LineCountingIterator operator++(int) {
        auto old = *this;
        ++*this;
        return old;
    }
    bool operator==(const LineCountingIterator& o) const { return pos == o.pos; }
};

inline std::string escape_pointer_token(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out += c;
    }
    return out;
}

class LineRecorder : public nlohmann::json_sax<json> {
public:
    LineRecorder(std::size_t* line, std::map<std::string, std::size_t>* lines) : line_(line), lines_(lines) {}

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }

    bool start_object(std::size_t) override {
        value();
        frames_.push_back({false, 0, current_});
        return true;
    }
    bool key(string_t& k) override {
        current_ = frames_.back().pointer + "/" + escape_pointer_token(k);
        (*lines_)[current_] = *line_;
        return true;
    }
    bool end_object() override { return pop(); }
    bool start_array(std::size_t) override {
        value();
        frames_.push_back({true, 0, current_});
        return true;
    }
    bool end_array() override { return pop(); }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

private:
    struct Frame {
        bool array;
        std::size_t index;
        std::string pointer;
    };

    bool value() {
        if (!frames_.empty() && frames_.back().array) {
            current_ = frames_.back().pointer + "/" + std::to_string(frames_.back().index++);
            (*lines_)[current_] = *line_;
        }
        return true;
    }
    bool pop() {
        current_ = frames_.back().pointer;
        frames_.pop_back();
        return true;
    }

    std::size_t* line_;
    std::map<std::string, std::size_t>* lines_;
    std::vector<Frame> frames_;
    std::string current_;
};

}  // namespace detail

class JsonSource {
public:
    static JsonSource parse(std::string text, std::string name = "<json>") {
        JsonSource src;
        src.name_ = std::move(name);
        src.text_ = std::move(text);
        try {
            src.root_ = json::parse(src.text_);
        } catch (const json::parse_error& e) {
            std::size_t line = 1;
            const std::size_t upto = std::min(e.byte, src.text_.size());
            for (std::size_t i = 0; i + 1 < upto; ++i)
                if (src.text_[i] == '\n') ++line;
            throw ValidationError("malformed JSON (" + std::string(e.what()) + ")", line, src.name_);
        }
        std::size_t line = 1;
        detail::LineRecorder recorder(&line, &src.lines_);
        const char* begin = src.text_.data();
        const char* end = begin + src.text_.size();
        json::sax_parse(detail::LineCountingIterator{begin, &line}, detail::LineCountingIterator{end, &line},
                        &recorder);
        return src;
    }

    static JsonSource load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    const json& root() const { return root_; }
    const std::string& name() const { return name_; }

    /// Line of the JSON pointer, or of its nearest recorded ancestor.
    std::size_t line_of(std::string pointer) const {
        while (!pointer.empty()) {
            if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
            pointer.erase(pointer.rfind('/'));
        }
        return 1;
    }

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
        const std::string field = pointer.empty() ? std::string("document") : pointer;
        throw ValidationError(field + ": " + message, line_of(pointer), name_);
    }

    const json& at(const std::string& pointer) const { return root_.at(json::json_pointer(pointer)); }
    bool has(const std::string& pointer) const { return root_.contains(json::json_pointer(pointer)); }

private:
    std::string name_;
    std::string text_;
    json root_;
    std::map<std::string, std::size_t> lines_;
};

}  // namespace scfde
