#pragma once

#include <stdexcept>
#include <string>

namespace mmrmx {

// Base for all library errors. what() always starts with the error kind,
// e.g. "NonMonotoneMissingness: subject 7 ...".
class Error : public std::runtime_error {
public:
    Error(const std::string& kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(kind) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define MMRMX_DEFINE_ERROR(Name)                                       \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}   \
    }

// trial_data
MMRMX_DEFINE_ERROR(NonMonotoneMissingness);
MMRMX_DEFINE_ERROR(InconsistentBaseline);
MMRMX_DEFINE_ERROR(EmptyArm);

// dgp
MMRMX_DEFINE_ERROR(InvalidCorrelation);
MMRMX_DEFINE_ERROR(InvalidHazard);

// estimators
MMRMX_DEFINE_ERROR(NonPositiveDefinite);
MMRMX_DEFINE_ERROR(SingularNormalEquations);
MMRMX_DEFINE_ERROR(EmptyOverlap);
MMRMX_DEFINE_ERROR(SingularInformation);
MMRMX_DEFINE_ERROR(InvalidSe);
MMRMX_DEFINE_ERROR(InsufficientData);

// i/o
MMRMX_DEFINE_ERROR(CsvError);
MMRMX_DEFINE_ERROR(ConfigError);

#undef MMRMX_DEFINE_ERROR

}  // namespace mmrmx
