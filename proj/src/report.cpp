#include "tracedit/data.hpp"
