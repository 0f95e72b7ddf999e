#pragma once

#include <stdexcept>
#include <string>

namespace diva {

// Base type for everything this library throws on its own behalf.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input data violates a documented precondition (bad labels, single class, ...).
class validation_error : public error {
public:
    explicit validation_error(const std::string& msg) : error(msg) {}
};

// A file does not match the expected column layout or version.
class schema_error : public error {
public:
    explicit schema_error(const std::string& msg) : error(msg) {}
};

// A cell or token could not be parsed; message carries the row index.
class parse_error : public error {
public:
    explicit parse_error(const std::string& msg) : error(msg) {}
};

// Model optimization failed (diverged, NaN loss); message carries the epoch.
class training_error : public error {
public:
    explicit training_error(const std::string& msg) : error(msg) {}
};

class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

class usage_error : public error {
public:
    explicit usage_error(const std::string& msg) : error(msg) {}
};

} // namespace diva
