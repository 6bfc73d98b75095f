#pragma once
#include <stdexcept>

namespace s3forge {

// Base class for every error this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroQuaternion : Error { using Error::Error; };    // inverse of (near-)zero
struct NotUnit : Error { using Error::Error; };           // unit-quaternion invariant violated
struct AtPole : Error { using Error::Error; };            // projection evaluated at its pole
struct DegenerateCircle : Error { using Error::Error; };  // circle radius below resolution
struct NotIncident : Error { using Error::Error; };       // circles do not pass through the point
struct AntipodalEdge : Error { using Error::Error; };     // no unique great circle through endpoints
struct PoleCollision : Error { using Error::Error; };     // geometry meets the projection pole
struct OutOfDomain : Error { using Error::Error; };       // surface parameter outside its rectangle
struct DegenerateTangent : Error { using Error::Error; }; // normal construction lost rank
struct BadIdentification : Error { using Error::Error; }; // glued seam points disagree
struct SchemaError : Error { using Error::Error; };       // scene file malformed
struct IoFailure : Error { using Error::Error; };         // file could not be read or written

} // namespace s3forge
