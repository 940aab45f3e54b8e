from .router import register
