// Copyright 2026 The tsw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsw/errors.hpp"

// Minimal XML document model: element tree with ordered attributes. Text
// content is skipped; the formats handled here (OSM and the simulator map
// files) are attribute-only. Not a general-purpose XML library.

namespace tsw {

struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlElement> children;

  const std::string* attr(std::string_view key) const {
    for (const auto& [k, v] : attrs)
      if (k == key) return &v;
    return nullptr;
  }

  std::string attr_or(std::string_view key, std::string fallback) const {
    const std::string* v = attr(key);
    return v ? *v : std::move(fallback);
  }

  void set_attr(std::string key, std::string value) {
    attrs.emplace_back(std::move(key), std::move(value));
  }

  template <typename Fn>
  void for_each(std::string_view child_name, Fn&& fn) const {
    for (const auto& c : children)
      if (c.name == child_name) fn(c);
  }
};

namespace detail {

class XmlParser {
 public:
  explicit XmlParser(std::string_view text) : s_(text) {}

  XmlElement parse_document() {
    skip_misc();
    require(!at_end(), Errc::malformed_xml, "no root element");
    XmlElement root = parse_element();
    skip_misc();
    require(at_end(), Errc::malformed_xml, "trailing content after root element");
    return root;
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  // Whitespace, comments, declarations, processing instructions, DOCTYPE,
  // and stray text between elements.
  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts_with("<!--")) {
        size_t end = s_.find("-->", pos_ + 4);
        require(end != std::string_view::npos, Errc::malformed_xml, "unterminated comment");
        pos_ = end + 3;
      } else if (starts_with("<?")) {
        size_t end = s_.find("?>", pos_ + 2);
        require(end != std::string_view::npos, Errc::malformed_xml, "unterminated declaration");
        pos_ = end + 2;
      } else if (starts_with("<!")) {
        size_t end = s_.find('>', pos_ + 2);
        require(end != std::string_view::npos, Errc::malformed_xml, "unterminated <! section");
        pos_ = end + 1;
      } else if (!at_end() && peek() != '<') {
        ++pos_;  // character data, ignored
      } else {
        break;
      }
    }
  }

  std::string parse_name() {
    size_t start = pos_;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
          c == '.') {
        ++pos_;
      } else {
        break;
      }
    }
    require(pos_ > start, Errc::malformed_xml, "expected name at offset " + std::to_string(pos_));
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    if (raw.find('&') == std::string_view::npos) return std::string(raw);
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size();) {
      if (raw[i] != '&') {
        out += raw[i++];
        continue;
      }
      size_t semi = raw.find(';', i);
      require(semi != std::string_view::npos, Errc::malformed_xml, "unterminated entity");
      std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (!ent.empty() && ent[0] == '#') {
        int base = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X')) ? 16 : 10;
        long code = std::strtol(std::string(ent.substr(base == 16 ? 2 : 1)).c_str(), nullptr, base);
        require(code > 0 && code < 0x110000, Errc::malformed_xml, "bad character reference");
        append_utf8(out, static_cast<uint32_t>(code));
      } else {
        fail(Errc::malformed_xml, "unknown entity &" + std::string(ent) + ";");
      }
      i = semi + 1;
    }
    return out;
  }

  static void append_utf8(std::string& out, uint32_t cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }

  XmlElement parse_element() {
    require(!at_end() && peek() == '<', Errc::malformed_xml, "expected '<'");
    ++pos_;
    XmlElement el;
    el.name = parse_name();
    while (true) {
      skip_ws();
      require(!at_end(), Errc::malformed_xml, "unterminated start tag <" + el.name);
      if (starts_with("/>")) {
        pos_ += 2;
        return el;
      }
      if (peek() == '>') {
        ++pos_;
        parse_children(el);
        return el;
      }
      std::string key = parse_name();
      skip_ws();
      require(!at_end() && peek() == '=', Errc::malformed_xml, "expected '=' after attribute " + key);
      ++pos_;
      skip_ws();
      require(!at_end() && (peek() == '"' || peek() == '\''), Errc::malformed_xml,
              "expected quoted value for attribute " + key);
      char quote = peek();
      ++pos_;
      size_t end = s_.find(quote, pos_);
      require(end != std::string_view::npos, Errc::malformed_xml, "unterminated attribute value");
      el.attrs.emplace_back(std::move(key), decode_entities(s_.substr(pos_, end - pos_)));
      pos_ = end + 1;
    }
  }

  void parse_children(XmlElement& el) {
    while (true) {
      skip_misc();
      require(!at_end(), Errc::malformed_xml, "unterminated element <" + el.name + ">");
      if (starts_with("</")) {
        pos_ += 2;
        std::string close = parse_name();
        require(close == el.name, Errc::malformed_xml,
                "mismatched close tag </" + close + "> for <" + el.name + ">");
        skip_ws();
        require(!at_end() && peek() == '>', Errc::malformed_xml, "expected '>' in close tag");
        ++pos_;
        return;
      }
      el.children.push_back(parse_element());
    }
  }

  std::string_view s_;
  size_t pos_ = 0;
};

inline void xml_escape_attr(const std::string& v, std::string& out) {
  for (char c : v) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
}

inline void xml_write_element(const XmlElement& el, int indent, std::string& out) {
  out.append(static_cast<size_t>(indent) * 2, ' ');
  out += '<';
  out += el.name;
  for (const auto& [k, v] : el.attrs) {
    out += ' ';
    out += k;
    out += "=\"";
    xml_escape_attr(v, out);
    out += '"';
  }
  if (el.children.empty()) {
    out += "/>\n";
    return;
  }
  out += ">\n";
  for (const auto& c : el.children) xml_write_element(c, indent + 1, out);
  out.append(static_cast<size_t>(indent) * 2, ' ');
  out += "</";
  out += el.name;
  out += ">\n";
}

}  // namespace detail

inline XmlElement xml_parse(std::string_view text) {
  return detail::XmlParser(text).parse_document();
}

inline std::string xml_write(const XmlElement& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  detail::xml_write_element(root, 0, out);
  return out;
}

}  // namespace tsw
