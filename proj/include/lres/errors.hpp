#pragma once

#include <stdexcept>
#include <string>

namespace lres {

// Bad user input: parameters, configuration files, selectors.
class BadParams : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConfigError : public BadParams {
public:
    using BadParams::BadParams;
};

class NonDiagonalizable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ThresholdCoincidence : public BadParams {
public:
    using BadParams::BadParams;
};

class OnSpectrum : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class OutsideDisk : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ChannelOnThresholdCollision : public BadParams {
public:
    using BadParams::BadParams;
};

class DecayViolation : public BadParams {
public:
    using BadParams::BadParams;
};

class NotSignDefinite : public BadParams {
public:
    using BadParams::BadParams;
};

class NotCaseB : public BadParams {
public:
    using BadParams::BadParams;
};

class OmegaTooLarge : public BadParams {
public:
    using BadParams::BadParams;
};

class EpsilonOnSpectrum : public BadParams {
public:
    using BadParams::BadParams;
};

// Numerical failures of the contour machinery.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotConverged : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class SingularOnContour : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class BoundaryZero : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class RankAmbiguous : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

class AtPole : public NumericalFailure {
public:
    using NumericalFailure::NumericalFailure;
};

}  // namespace lres
