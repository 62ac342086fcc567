from sqlalchemy.orm import DeclarativeBase


class Base(DeclarativeBase):
    """Declarative base of the run registry tables"""
