from pydantic import BaseModel, ConfigDict


class DomainModel(BaseModel):
    """Modèle de base pour les enregistrements du domaine (immuables)"""

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        use_enum_values=False
    )


class RunConfigModel(BaseModel):
    """Modèle de base pour les hyperparamètres de run"""

    model_config = ConfigDict(
        extra="forbid",
        validate_assignment=True,
        validate_default=True
    )
