from .scheme import CodingScheme, SchemeClass, load_default_scheme
from .store import AnnotationStore
from .service import SampleBundle, SamplePost, create_app, sample_bundle_from_population

__all__ = [
    "AnnotationStore",
    "CodingScheme",
    "SchemeClass",
    "SampleBundle",
    "SamplePost",
    "create_app",
    "load_default_scheme",
    "sample_bundle_from_population",
]
