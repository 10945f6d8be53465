package org.acme.clinic;

import org.framework.web.*;

@RequestMapping("/owners/{ownerId}/pets/{petId}/visits")
public class VisitController {

    private final ClinicService clinic;

    @PostMapping("/new")
    public VisitCreated createVisit(@PathVariable("ownerId") int ownerId,
                                    @PathVariable("petId") int petId,
                                    @RequestParam("date") String date,
                                    @RequestParam("description") String description) {
        OwnerDetail owner = clinic.getOwner(ownerId);
        PetDetail pet = clinic.petOf(owner, petId);
        if (clinic.isPastDate(date)) {
            throw new InvalidVisitDateException(date);
        }
        if (description.contains("emergency") && !clinic.isToday(date)) {
            throw new EmergencyWindowException(description);
        }
        return clinic.createVisit(pet, date, description);
    }

    @GetMapping
    public VisitLog listVisits(@PathVariable("ownerId") int ownerId,
                               @PathVariable("petId") int petId) {
        OwnerDetail owner = clinic.getOwner(ownerId);
        PetDetail pet = clinic.petOf(owner, petId);
        return clinic.visitsForPet(pet);
    }
}
