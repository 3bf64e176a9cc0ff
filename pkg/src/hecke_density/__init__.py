"""Low-lying zeros of angular Hecke L-functions over class-number-one imaginary quadratic fields."""
from .quadfield import FieldConfig, HEEGNER, make_field

__all__ = ["FieldConfig", "HEEGNER", "make_field"]
__version__ = "0.1.0"
