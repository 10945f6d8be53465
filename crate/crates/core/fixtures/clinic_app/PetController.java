package org.acme.clinic;

import org.framework.web.*;

@RequestMapping("/owners/{ownerId}/pets")
public class PetController {

    private final ClinicService clinic;

    @PostMapping("/new")
    public PetCreated createPet(@PathVariable("ownerId") int ownerId,
                                @RequestParam("name") String name,
                                @RequestParam("type") String type) {
        OwnerDetail owner = clinic.getOwner(ownerId);
        if (!clinic.isSupportedPetType(type)) {
            throw new InvalidPetTypeException(type);
        }
        return clinic.registerPet(owner, name, type);
    }

    @GetMapping("/{petId}")
    public PetDetail showPet(@PathVariable("ownerId") int ownerId,
                             @PathVariable("petId") int petId) {
        OwnerDetail owner = clinic.getOwner(ownerId);
        return clinic.petOf(owner, petId);
    }
}
